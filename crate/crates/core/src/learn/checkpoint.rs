//! `GLM1` checkpoints: magic, u32 layer count L, L+1 u32 widths, then per
//! layer the row-major f64 weights followed by the f64 biases, all
//! little-endian.

use ndarray::{Array1, Array2};

use super::mlp::MlpModel;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GLM1";

pub fn encode_model(m: &MlpModel) -> Vec<u8> {
    let widths = m.widths();
    let mut out = Vec::with_capacity(8 + widths.len() * 4 + m.num_parameters() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m.weights.len() as u32).to_le_bytes());
    for w in &widths {
        out.extend_from_slice(&(*w as u32).to_le_bytes());
    }
    for (w, b) in m.weights.iter().zip(&m.biases) {
        for v in w.iter().chain(b.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<MlpModel> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing GLM1 magic".into()));
    }
    let u32_at = |i: usize| -> Result<usize> {
        bytes
            .get(i..i + 4)
            .map(|s| u32::from_le_bytes(s.try_into().unwrap()) as usize)
            .ok_or_else(|| Error::Format("truncated checkpoint header".into()))
    };
    let layers = u32_at(4)?;
    if layers == 0 {
        return Err(Error::Format("checkpoint without layers".into()));
    }
    let widths = (0..=layers)
        .map(|i| u32_at(8 + 4 * i))
        .collect::<Result<Vec<_>>>()?;
    let params: usize = widths.windows(2).map(|p| p[1] * p[0] + p[1]).sum();
    let start = 8 + 4 * (layers + 1);
    let expected = start + params * 8;
    if bytes.len() != expected {
        return Err(Error::Length {
            expected,
            found: bytes.len(),
        });
    }
    let mut values = bytes[start..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut weights = Vec::with_capacity(layers);
    let mut biases = Vec::with_capacity(layers);
    for p in widths.windows(2) {
        let (fan_in, fan_out) = (p[0], p[1]);
        let w: Vec<f64> = values.by_ref().take(fan_in * fan_out).collect();
        weights.push(Array2::from_shape_vec((fan_out, fan_in), w).expect("sized above"));
        biases.push(Array1::from_iter(values.by_ref().take(fan_out)));
    }
    Ok(MlpModel { weights, biases })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::mlp::init_model;

    #[test]
    fn checkpoint_round_trip() {
        let m = init_model(&[7, 5, 3], 11).unwrap();
        let bytes = encode_model(&m);
        assert_eq!(&bytes[..4], b"GLM1");
        assert_eq!(decode_model(&bytes).unwrap(), m);
        assert!(matches!(decode_model(&bytes[..bytes.len() - 8]), Err(Error::Length { .. })));
        let mut bad = bytes.clone();
        bad[3] = b'2';
        assert!(matches!(decode_model(&bad), Err(Error::Format(_))));
    }
}
