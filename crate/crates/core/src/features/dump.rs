//! Length-prefixed binary dump of per-column feature vectors.
//!
//! Layout (little endian): magic `SLFEAT`, u16 version, u32 record count,
//! then per record: u32 key length + UTF-8 key, u8 category code,
//! u32 part count + (u8 code, u32 offset) per part, u32 length, f64 data.

use std::io::{Read, Write};

use super::{FeatureCategory, FeatureVector};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"SLFEAT";
pub const VERSION: u16 = 1;

fn parts_of(category: FeatureCategory) -> Vec<FeatureCategory> {
    match category {
        FeatureCategory::All => FeatureCategory::PARTS.to_vec(),
        c => vec![c],
    }
}

pub fn write_dump<W: Write>(mut w: W, records: &[(String, FeatureVector)]) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(records.len() as u32).to_le_bytes())?;
    for (key, fv) in records {
        w.write_all(&(key.len() as u32).to_le_bytes())?;
        w.write_all(key.as_bytes())?;
        w.write_all(&[fv.category().code()])?;
        let parts = parts_of(fv.category());
        w.write_all(&(parts.len() as u32).to_le_bytes())?;
        for p in parts {
            let offset = if fv.category() == FeatureCategory::All {
                p.offset()
            } else {
                0
            };
            w.write_all(&[p.code()])?;
            w.write_all(&(offset as u32).to_le_bytes())?;
        }
        w.write_all(&(fv.len() as u32).to_le_bytes())?;
        for x in fv.data() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

fn corrupt(m: impl Into<String>) -> Error {
    Error::ModelFormat(format!("feature dump: {}", m.into()))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| corrupt(e.to_string()))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    read_exact(r, &mut b)?;
    Ok(b[0])
}

pub fn read_dump<R: Read>(mut r: R) -> Result<Vec<(String, FeatureVector)>> {
    let mut magic = [0u8; 6];
    read_exact(&mut r, &mut magic)?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut v = [0u8; 2];
    read_exact(&mut r, &mut v)?;
    if u16::from_le_bytes(v) != VERSION {
        return Err(corrupt(format!(
            "unsupported version {}",
            u16::from_le_bytes(v)
        )));
    }
    let n = read_u32(&mut r)?;
    let mut out = Vec::new();
    for _ in 0..n {
        let klen = read_u32(&mut r)? as usize;
        let mut key = vec![0u8; klen];
        read_exact(&mut r, &mut key)?;
        let key = String::from_utf8(key).map_err(|_| corrupt("key not utf-8"))?;
        let category =
            FeatureCategory::from_code(read_u8(&mut r)?).ok_or_else(|| corrupt("bad category"))?;
        let parts = read_u32(&mut r)?;
        for _ in 0..parts {
            let code = read_u8(&mut r)?;
            let offset = read_u32(&mut r)? as usize;
            let p = FeatureCategory::from_code(code).ok_or_else(|| corrupt("bad part"))?;
            let expected = if category == FeatureCategory::All {
                p.offset()
            } else {
                0
            };
            if offset != expected {
                return Err(corrupt(format!("part {p:?} at offset {offset}")));
            }
        }
        let len = read_u32(&mut r)? as usize;
        let mut data = Vec::with_capacity(len);
        let mut b = [0u8; 8];
        for _ in 0..len {
            read_exact(&mut r, &mut b)?;
            data.push(f64::from_le_bytes(b));
        }
        out.push((key, FeatureVector::new(category, data)?));
    }
    Ok(out)
}
