//! `.fvecs` / `.bvecs` / `.ivecs` codecs.
//!
//! Each record is a little-endian `u32` dimension followed by that many
//! components (`f32`, `u8` or `u32`). All records of a file share one dimension.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::vectors::Vectors;

/// Splits `buf` into `(dimension, payload)` records with `elem`-byte components.
fn records(buf: &[u8], elem: usize) -> Result<(usize, Vec<&[u8]>)> {
    let mut pos = 0usize;
    let mut dim: Option<usize> = None;
    let mut out = Vec::new();
    while pos < buf.len() {
        if buf.len() - pos < 4 {
            return Err(Error::at_byte(pos, "truncated dimension header"));
        }
        let d = u32::from_le_bytes(buf[pos..pos + 4].try_into().unwrap()) as usize;
        if d == 0 {
            return Err(Error::at_byte(pos, "zero dimension"));
        }
        if let Some(expected) = dim {
            if d != expected {
                return Err(Error::at_byte(
                    pos,
                    format!("inconsistent dimension {d}, expected {expected}"),
                ));
            }
        }
        let len = d
            .checked_mul(elem)
            .filter(|&l| l <= buf.len() - pos - 4)
            .ok_or_else(|| Error::at_byte(pos, format!("truncated record of dimension {d}")))?;
        out.push(&buf[pos + 4..pos + 4 + len]);
        dim = Some(d);
        pos += 4 + len;
    }
    Ok((dim.unwrap_or(0), out))
}

pub fn parse_fvecs(buf: &[u8]) -> Result<Vectors> {
    let (dim, recs) = records(buf, 4)?;
    let data = recs
        .iter()
        .flat_map(|r| r.chunks_exact(4))
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(if dim == 0 {
        Vectors::new(0)
    } else {
        Vectors::from_flat(dim, data)?
    })
}

pub fn parse_bvecs(buf: &[u8]) -> Result<Vectors> {
    let (dim, recs) = records(buf, 1)?;
    let data = recs.iter().flat_map(|r| r.iter()).map(|&b| b as f32).collect();
    Ok(if dim == 0 {
        Vectors::new(0)
    } else {
        Vectors::from_flat(dim, data)?
    })
}

pub fn parse_ivecs(buf: &[u8]) -> Result<Vec<Vec<u32>>> {
    let (_, recs) = records(buf, 4)?;
    Ok(recs
        .iter()
        .map(|r| {
            r.chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                .collect()
        })
        .collect())
}

pub fn encode_fvecs(v: &Vectors) -> Vec<u8> {
    let mut out = Vec::with_capacity(v.len() * (4 + 4 * v.dim()));
    for row in v.iter().take(v.len()) {
        out.extend_from_slice(&(v.dim() as u32).to_le_bytes());
        for x in row {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

/// Fails unless every component is an integer in `0..=255`.
pub fn encode_bvecs(v: &Vectors) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(v.len() * (4 + v.dim()));
    for (i, row) in v.iter().take(v.len()).enumerate() {
        out.extend_from_slice(&(v.dim() as u32).to_le_bytes());
        for &x in row {
            if !(0.0..=255.0).contains(&x) || x.fract() != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "vector {i} has component {x} not representable as u8"
                )));
            }
            out.push(x as u8);
        }
    }
    Ok(out)
}

pub fn encode_ivecs<R: AsRef<[u32]>>(rows: &[R]) -> Vec<u8> {
    let mut out = Vec::new();
    for row in rows {
        let row = row.as_ref();
        out.extend_from_slice(&(row.len() as u32).to_le_bytes());
        for x in row {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn load_fvecs(path: impl AsRef<Path>) -> Result<Vectors> {
    parse_fvecs(&fs::read(path)?)
}

pub fn load_bvecs(path: impl AsRef<Path>) -> Result<Vectors> {
    parse_bvecs(&fs::read(path)?)
}

pub fn load_ivecs(path: impl AsRef<Path>) -> Result<Vec<Vec<u32>>> {
    parse_ivecs(&fs::read(path)?)
}

pub fn write_fvecs(path: impl AsRef<Path>, v: &Vectors) -> Result<()> {
    Ok(fs::write(path, encode_fvecs(v))?)
}

pub fn write_bvecs(path: impl AsRef<Path>, v: &Vectors) -> Result<()> {
    Ok(fs::write(path, encode_bvecs(v)?)?)
}

/// Loads `.fvecs` or `.bvecs` by file extension.
pub fn load_vectors(path: impl AsRef<Path>) -> Result<Vectors> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("fvecs") => load_fvecs(path),
        Some("bvecs") => load_bvecs(path),
        _ => Err(Error::InvalidInput(format!(
            "{}: expected a .fvecs or .bvecs file",
            path.display()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn handcrafted_fvecs_record() {
        let mut buf = 2u32.to_le_bytes().to_vec();
        buf.extend_from_slice(&1.0f32.to_le_bytes());
        buf.extend_from_slice(&2.0f32.to_le_bytes());
        assert_eq!(buf.len(), 12);
        let v = parse_fvecs(&buf).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.get(0), &[1.0, 2.0]);
        assert_eq!(encode_fvecs(&v), buf);
    }

    #[test]
    fn handcrafted_bvecs_record() {
        let buf = [3, 0, 0, 0, 0, 128, 255];
        let v = parse_bvecs(&buf).unwrap();
        assert_eq!(v.get(0), &[0.0, 128.0, 255.0]);
        assert_eq!(encode_bvecs(&v).unwrap(), buf);
    }

    #[test]
    fn empty_files_are_empty_datasets() {
        assert!(parse_fvecs(&[]).unwrap().is_empty());
        assert!(parse_bvecs(&[]).unwrap().is_empty());
        assert!(parse_ivecs(&[]).unwrap().is_empty());
    }

    #[test]
    fn malformed_inputs_name_the_offset() {
        // Truncated header.
        let err = parse_fvecs(&[1, 0]).unwrap_err().to_string();
        assert!(err.contains("byte 0"), "{err}");
        // Zero dimension in the second record.
        let mut buf = 1u32.to_le_bytes().to_vec();
        buf.extend_from_slice(&0.5f32.to_le_bytes());
        buf.extend_from_slice(&0u32.to_le_bytes());
        let err = parse_fvecs(&buf).unwrap_err().to_string();
        assert!(err.contains("byte 8") && err.contains("zero"), "{err}");
        // Inconsistent dimension.
        let mut buf = 1u32.to_le_bytes().to_vec();
        buf.extend_from_slice(&0.5f32.to_le_bytes());
        buf.extend_from_slice(&2u32.to_le_bytes());
        buf.extend_from_slice(&[0; 8]);
        assert!(parse_fvecs(&buf).unwrap_err().to_string().contains("inconsistent"));
        // Truncated payload.
        let buf = [4, 0, 0, 0, 0, 0, 0, 0];
        assert!(parse_fvecs(&buf).unwrap_err().to_string().contains("truncated"));
        // Huge declared dimension must not overflow.
        let buf = u32::MAX.to_le_bytes();
        assert!(parse_fvecs(&buf).is_err());
    }

    #[test]
    fn bvecs_rejects_non_byte_values() {
        let v = Vectors::from_flat(2, vec![1.5, 2.0]).unwrap();
        assert!(encode_bvecs(&v).is_err());
        let v = Vectors::from_flat(1, vec![256.0]).unwrap();
        assert!(encode_bvecs(&v).is_err());
    }
}
