//! On-disk forms of a [`FeatureSet`].
//!
//! Binary container, all integers and floats little-endian:
//!
//! | offset | size | field |
//! |---|---|---|
//! | 0 | 4 | magic `GBLF` |
//! | 4 | 4 | version, `u32` = 1 |
//! | 8 | 4 | row width `W`, `u32` |
//! | 12 | 8 | row count `R`, `u64` |
//! | 20 | 4 | encoder-spec length `L`, `u32` |
//! | 24 | L | encoder spec, UTF-8 (textual [`EncoderSpec`]) |
//! | 24+L | 4·R·W | rows, `f32`, row-major |
//! | … | 12·R | voxel coordinates `(ix, iy, iz)`, `u32` each |
//!
//! The file must end exactly after the coordinates. The CSV form has a header
//! `ix,iy,iz,f0,…,f{W-1}` and one line per row.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::encoder::{EncoderSpec, FeatureSet};
use crate::error::{Error, Result};
use crate::voxel::VoxelCoord;

pub const MAGIC: &[u8; 4] = b"GBLF";
pub const VERSION: u32 = 1;
const HEADER: usize = 24;

pub fn encode_feature_set(fs: &FeatureSet) -> Vec<u8> {
    let spec = fs.spec().to_string();
    let mut out = Vec::with_capacity(HEADER + spec.len() + fs.len() * (4 * fs.width() + 12));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(fs.width() as u32).to_le_bytes());
    out.extend_from_slice(&(fs.len() as u64).to_le_bytes());
    out.extend_from_slice(&(spec.len() as u32).to_le_bytes());
    out.extend_from_slice(spec.as_bytes());
    for v in fs.values() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    for c in fs.coords() {
        for i in [c.ix, c.iy, c.iz] {
            out.extend_from_slice(&i.to_le_bytes());
        }
    }
    out
}

pub fn decode_feature_set(bytes: &[u8], origin: &Path) -> Result<FeatureSet> {
    let bad = |reason: String, at: Option<usize>| Error::malformed(origin, reason, at);
    if bytes.len() < HEADER {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len()), None));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("bad magic bytes".into(), Some(0)));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let version = u32_at(4);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}"), Some(4)));
    }
    let width = u32_at(8) as usize;
    let rows = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let spec_len = u32_at(20) as usize;

    let rows = usize::try_from(rows).map_err(|_| bad("row count overflows".into(), Some(12)))?;
    let body = rows
        .checked_mul(width)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(rows.checked_mul(12)?))
        .and_then(|n| n.checked_add(HEADER + spec_len))
        .ok_or_else(|| bad("declared sizes overflow".into(), Some(8)))?;
    if bytes.len() != body {
        return Err(bad(format!("expected {body} bytes from the header, found {}", bytes.len()), None));
    }
    let spec_text = std::str::from_utf8(&bytes[HEADER..HEADER + spec_len])
        .map_err(|_| bad("encoder spec is not UTF-8".into(), Some(HEADER)))?;
    let spec: EncoderSpec = spec_text
        .parse()
        .map_err(|e| bad(format!("encoder spec {spec_text:?}: {e}"), Some(HEADER)))?;
    if spec.width() != width {
        return Err(bad(format!("spec {spec_text:?} has width {}, header says {width}", spec.width()), Some(8)));
    }

    let mut at = HEADER + spec_len;
    let mut values = Vec::with_capacity(rows * width);
    for _ in 0..rows * width {
        let v = f32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
        if !v.is_finite() {
            return Err(bad("non-finite feature value".into(), Some(at)));
        }
        values.push(v as f64);
        at += 4;
    }
    let mut coords = Vec::with_capacity(rows);
    for _ in 0..rows {
        coords.push(VoxelCoord::new(u32_at(at), u32_at(at + 4), u32_at(at + 8)));
        at += 12;
    }
    FeatureSet::new(spec, coords, values)
}

pub fn write_feature_set(fs: &FeatureSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_feature_set(fs)).map_err(|e| Error::io(path, e))
}

pub fn read_feature_set(path: impl AsRef<Path>) -> Result<FeatureSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_feature_set(&bytes, path)
}

pub fn write_feature_csv(fs: &FeatureSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    let header: Vec<String> = ["ix", "iy", "iz"]
        .into_iter()
        .map(String::from)
        .chain((0..fs.width()).map(|k| format!("f{k}")))
        .collect();
    writeln!(out, "{}", header.join(",")).expect("write to Vec");
    for (c, row) in fs.coords().iter().zip(fs.rows()) {
        write!(out, "{},{},{}", c.ix, c.iy, c.iz).expect("write to Vec");
        for v in row {
            write!(out, ",{v}").expect("write to Vec");
        }
        writeln!(out).expect("write to Vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
