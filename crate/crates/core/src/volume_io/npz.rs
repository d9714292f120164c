//! Minimal ZIP support for `.npz` archives: reads stored and deflate
//! members, writes stored ones.

use std::io::Read;

use flate2::read::DeflateDecoder;

use super::npy::{read_npy, write_npy, Tensor};
use crate::error::{Error, Result};

const EOCD_SIG: u32 = 0x0605_4b50;
const ZIP64_EOCD_SIG: u32 = 0x0606_4b50;
const ZIP64_LOCATOR_SIG: u32 = 0x0706_4b50;
const CENTRAL_SIG: u32 = 0x0201_4b50;
const LOCAL_SIG: u32 = 0x0403_4b50;

const METHOD_STORED: u16 = 0;
const METHOD_DEFLATE: u16 = 8;

#[derive(Debug, Clone)]
struct Entry {
    name: String,
    method: u16,
    crc32: u32,
    compressed_size: u64,
    uncompressed_size: u64,
    local_offset: u64,
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn at(buf: &'a [u8], pos: usize) -> Self {
        Cursor { buf, pos }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format("zip structure runs past end of archive".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn find_eocd(bytes: &[u8]) -> Result<usize> {
    if bytes.len() < 22 {
        return Err(Error::Format("archive too short for a zip directory".into()));
    }
    let lowest = bytes.len().saturating_sub(22 + u16::MAX as usize);
    (lowest..=bytes.len() - 22)
        .rev()
        .find(|&i| bytes[i..i + 4] == EOCD_SIG.to_le_bytes())
        .ok_or_else(|| Error::Format("no end-of-central-directory record".into()))
}

fn central_directory(bytes: &[u8]) -> Result<Vec<Entry>> {
    let eocd = find_eocd(bytes)?;
    let mut c = Cursor::at(bytes, eocd + 4);
    c.take(6)?;
    let mut count = u64::from(c.u16()?);
    c.u32()?;
    let mut cd_offset = u64::from(c.u32()?);

    if (count == 0xFFFF || cd_offset == 0xFFFF_FFFF) && eocd >= 20 {
        let mut loc = Cursor::at(bytes, eocd - 20);
        if loc.u32()? == ZIP64_LOCATOR_SIG {
            loc.u32()?;
            let z64 = loc.u64()? as usize;
            let mut r = Cursor::at(bytes, z64);
            if r.u32()? != ZIP64_EOCD_SIG {
                return Err(Error::Format("bad zip64 end-of-directory record".into()));
            }
            r.take(8 + 2 + 2 + 4 + 4 + 8)?;
            count = r.u64()?;
            r.u64()?;
            cd_offset = r.u64()?;
        }
    }

    let mut c = Cursor::at(bytes, cd_offset as usize);
    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        if c.u32()? != CENTRAL_SIG {
            return Err(Error::Format("bad central directory signature".into()));
        }
        c.take(4)?;
        let _flags = c.u16()?;
        let method = c.u16()?;
        c.take(4)?;
        let crc32 = c.u32()?;
        let mut compressed_size = u64::from(c.u32()?);
        let mut uncompressed_size = u64::from(c.u32()?);
        let name_len = c.u16()? as usize;
        let extra_len = c.u16()? as usize;
        let comment_len = c.u16()? as usize;
        c.take(8)?;
        let mut local_offset = u64::from(c.u32()?);
        let name = String::from_utf8_lossy(c.take(name_len)?).into_owned();
        let extra = c.take(extra_len)?;
        c.take(comment_len)?;

        let mut e = Cursor::at(extra, 0);
        while e.pos + 4 <= extra.len() {
            let id = e.u16()?;
            let size = e.u16()? as usize;
            let body = e.take(size)?;
            if id == 0x0001 {
                let mut z = Cursor::at(body, 0);
                if uncompressed_size == 0xFFFF_FFFF {
                    uncompressed_size = z.u64()?;
                }
                if compressed_size == 0xFFFF_FFFF {
                    compressed_size = z.u64()?;
                }
                if local_offset == 0xFFFF_FFFF {
                    local_offset = z.u64()?;
                }
            }
        }
        entries.push(Entry {
            name,
            method,
            crc32,
            compressed_size,
            uncompressed_size,
            local_offset,
        });
    }
    Ok(entries)
}

/// Names of all members stored in the archive, in directory order.
pub fn list_npz_entries(bytes: &[u8]) -> Result<Vec<String>> {
    Ok(central_directory(bytes)?.into_iter().map(|e| e.name).collect())
}

fn extract(bytes: &[u8], entry: &Entry) -> Result<Vec<u8>> {
    let mut c = Cursor::at(bytes, entry.local_offset as usize);
    if c.u32()? != LOCAL_SIG {
        return Err(Error::Format(format!("bad local header for {}", entry.name)));
    }
    c.take(22)?;
    let name_len = c.u16()? as usize;
    let extra_len = c.u16()? as usize;
    c.take(name_len + extra_len)?;
    let raw = c.take(entry.compressed_size as usize)?;

    let data = match entry.method {
        METHOD_STORED => raw.to_vec(),
        METHOD_DEFLATE => {
            let mut out = Vec::with_capacity(entry.uncompressed_size as usize);
            DeflateDecoder::new(raw)
                .read_to_end(&mut out)
                .map_err(|e| Error::Format(format!("inflate {}: {e}", entry.name)))?;
            out
        }
        m => {
            return Err(Error::Unsupported(format!(
                "zip compression method {m} for {}",
                entry.name
            )))
        }
    };
    if data.len() as u64 != entry.uncompressed_size {
        return Err(Error::Length {
            expected: entry.uncompressed_size as usize,
            found: data.len(),
        });
    }
    if crc32fast::hash(&data) != entry.crc32 {
        return Err(Error::Format(format!("crc mismatch in {}", entry.name)));
    }
    Ok(data)
}

/// Read the array stored as `entry_name.npy` inside an `.npz` archive.
pub fn read_npz(bytes: &[u8], entry_name: &str) -> Result<Tensor> {
    let wanted = if entry_name.ends_with(".npy") {
        entry_name.to_string()
    } else {
        format!("{entry_name}.npy")
    };
    let entries = central_directory(bytes)?;
    let entry = entries
        .iter()
        .find(|e| e.name == wanted)
        .ok_or_else(|| Error::NotFound(format!("archive member {wanted}")))?;
    read_npy(&extract(bytes, entry)?)
}

/// Uncompressed archive with one `{name}.npy` member per entry, in order.
pub fn write_npz(entries: &[(&str, &Tensor)]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut central = Vec::new();
    for (name, tensor) in entries {
        let name = format!("{name}.npy");
        let payload = write_npy(tensor);
        let crc = crc32fast::hash(&payload);
        let offset = out.len() as u32;
        let size = payload.len() as u32;
        out.extend_from_slice(&LOCAL_SIG.to_le_bytes());
        out.extend_from_slice(&[20, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
        out.extend_from_slice(&crc.to_le_bytes());
        out.extend_from_slice(&size.to_le_bytes());
        out.extend_from_slice(&size.to_le_bytes());
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&payload);

        central.extend_from_slice(&CENTRAL_SIG.to_le_bytes());
        central.extend_from_slice(&[20, 0, 20, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
        central.extend_from_slice(&crc.to_le_bytes());
        central.extend_from_slice(&size.to_le_bytes());
        central.extend_from_slice(&size.to_le_bytes());
        central.extend_from_slice(&(name.len() as u16).to_le_bytes());
        central.extend_from_slice(&[0; 12]);
        central.extend_from_slice(&offset.to_le_bytes());
        central.extend_from_slice(name.as_bytes());
    }
    let cd_offset = out.len() as u32;
    out.extend_from_slice(&central);
    let count = entries.len() as u16;
    out.extend_from_slice(&EOCD_SIG.to_le_bytes());
    out.extend_from_slice(&[0, 0, 0, 0]);
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&(central.len() as u32).to_le_bytes());
    out.extend_from_slice(&cd_offset.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out
}
