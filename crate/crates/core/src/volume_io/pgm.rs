//! Binary PGM (`P5`, maxval 255) reader for single images.

use super::npy::{Tensor, TensorData};
use crate::error::{Error, Result};

pub fn read_pgm(bytes: &[u8]) -> Result<Tensor> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;

    if fields[0] != "P5" {
        return Err(Error::Format(format!("PGM magic {:?}", fields[0])));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad PGM header field {s:?}")))
    };
    let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    if maxval != 255 {
        return Err(Error::Unsupported(format!("PGM maxval {maxval}")));
    }
    let expected = width * height;
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() < expected {
        return Err(Error::Length {
            expected,
            found: raster.len(),
        });
    }
    Tensor::new(vec![height, width], TensorData::U8(raster[..expected].to_vec()))
}
