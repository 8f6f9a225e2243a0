//! Point-cloud file formats.
//!
//! * KITTI-style `.bin`: packed records of four little-endian `f32`
//!   (`x, y, z, intensity`), 16 bytes per point, no header.
//! * CSV/XYZ: one point per line, 3 or 4 comma-separated decimals; blank
//!   lines and lines starting with `#` are skipped.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

const KITTI_RECORD: usize = 16;

pub fn load_kitti_bin(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_kitti_bin(&bytes, path)
}

/// Decode KITTI `.bin` bytes; `origin` is only used in error messages.
pub fn parse_kitti_bin(bytes: &[u8], origin: &Path) -> Result<PointCloud> {
    if bytes.len() % KITTI_RECORD != 0 {
        return Err(Error::malformed(
            origin,
            format!("length {} is not a multiple of 16 bytes", bytes.len()),
            None,
        ));
    }
    let n = bytes.len() / KITTI_RECORD;
    let mut xyz = Vec::with_capacity(n);
    let mut intensity = Vec::with_capacity(n);
    for (k, rec) in bytes.chunks_exact(KITTI_RECORD).enumerate() {
        let mut v = [0f32; 4];
        for (slot, raw) in v.iter_mut().zip(rec.chunks_exact(4)) {
            *slot = f32::from_le_bytes(raw.try_into().expect("4-byte chunk"));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::malformed(origin, "non-finite value in point", Some(k)));
        }
        xyz.push([v[0] as f64, v[1] as f64, v[2] as f64]);
        intensity.push(v[3] as f64);
    }
    PointCloud::new(xyz, Some(intensity), frame_from(origin))
}

/// Write `cloud` as KITTI `.bin`. Coordinates are narrowed to `f32`; xyz-only
/// clouds get intensity 0.
pub fn write_kitti_bin(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_kitti_bin(cloud)).map_err(|e| Error::io(path, e))
}

pub fn encode_kitti_bin(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.len() * KITTI_RECORD);
    for k in 0..cloud.len() {
        for v in cloud.xyzi(k) {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn load_xyz_csv(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_xyz_csv(&text, path)
}

/// Parse CSV/XYZ text. Errors carry 1-based line numbers.
pub fn parse_xyz_csv(text: &str, origin: &Path) -> Result<PointCloud> {
    let mut arity = None;
    let mut xyz = Vec::new();
    let mut intensity = Vec::new();
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(Error::malformed(
                origin,
                format!("expected 3 or 4 fields, found {}", fields.len()),
                Some(lineno),
            ));
        }
        match arity {
            None => arity = Some(fields.len()),
            Some(a) if a != fields.len() => {
                return Err(Error::malformed(
                    origin,
                    format!("mixed arity: {} fields after {a}-field lines", fields.len()),
                    Some(lineno),
                ))
            }
            Some(_) => {}
        }
        let mut v = [0.0f64; 4];
        for (slot, field) in v.iter_mut().zip(&fields) {
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| {
                    Error::malformed(origin, format!("cannot parse number {field:?}"), Some(lineno))
                })?;
        }
        xyz.push([v[0], v[1], v[2]]);
        intensity.push(v[3]);
    }
    let intensity = (arity == Some(4)).then_some(intensity);
    PointCloud::new(xyz, intensity, frame_from(origin))
}

pub fn write_xyz_csv(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for p in cloud.points() {
        match p.intensity {
            Some(i) => writeln!(out, "{},{},{},{}", p.x, p.y, p.z, i),
            None => writeln!(out, "{},{},{}", p.x, p.y, p.z),
        }
        .expect("write to Vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn frame_from(origin: &Path) -> String {
    origin
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sensor".to_owned())
}
