//! Domain-shift operators.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::scene::{object_stream, sample_ground, sample_object, LabeledCloud, GROUND_ID, GROUND_STREAM};
use crate::cloud::{subsample_indices, PointCloud};
use crate::error::{Error, Result};
use crate::rng;

/// A target domain, relative to the generated scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainSpec {
    /// Height shift of the sensor origin, meters.
    pub z_offset: f64,
    /// Scale of the number of points per object (and on the ground).
    pub density_factor: f64,
    /// Share of points kept after all other steps.
    pub keep_fraction: f64,
    /// Isotropic Gaussian noise, meters.
    pub noise_sigma: f64,
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec::IDENTITY
    }
}

impl DomainSpec {
    pub const IDENTITY: DomainSpec = DomainSpec {
        z_offset: 0.0,
        density_factor: 1.0,
        keep_fraction: 1.0,
        noise_sigma: 0.0,
    };

    /// Named presets: `identity`, `dense-64-beam`, `sparse-32-beam`,
    /// `shifted-origin`.
    ///
    /// The beam-count names only make configs readable; the densities are not
    /// calibrated against any sensor.
    pub fn preset(name: &str) -> Option<DomainSpec> {
        let base = DomainSpec::IDENTITY;
        Some(match name {
            "identity" | "in-domain" | "dense-64-beam" => base,
            "sparse-32-beam" => DomainSpec {
                density_factor: 0.25,
                ..base
            },
            "shifted-origin" => DomainSpec { z_offset: 1.6, ..base },
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density_factor > 0.0 && self.density_factor.is_finite()) {
            return Err(Error::invalid(format!("density_factor must be positive, got {}", self.density_factor)));
        }
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::invalid(format!("keep_fraction must lie in (0, 1], got {}", self.keep_fraction)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid("noise_sigma must be non-negative"));
        }
        if !self.z_offset.is_finite() {
            return Err(Error::invalid("z_offset must be finite"));
        }
        Ok(())
    }

    /// A preset name, an inline `key=value` list, or a path to a TOML file
    /// with the fields of [`DomainSpec`].
    pub fn resolve(arg: &str) -> Result<Self> {
        let path = std::path::Path::new(arg);
        if path.is_file() {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let d: DomainSpec = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            d.validate().map_err(Error::into_config)?;
            return Ok(d);
        }
        arg.parse()
    }

    pub fn is_identity(&self) -> bool {
        *self == DomainSpec::IDENTITY
    }
}

/// `z=1.6;density=0.5;keep=0.25;noise=0.01`, any subset, or a preset name.
impl FromStr for DomainSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(d) = DomainSpec::preset(s.trim()) {
            return Ok(d);
        }
        let mut d = DomainSpec::IDENTITY;
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("unknown domain {s:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad number in domain term {part:?}")))?;
            match k.trim() {
                "z" | "z_offset" => d.z_offset = v,
                "density" | "density_factor" => d.density_factor = v,
                "keep" | "keep_fraction" => d.keep_fraction = v,
                "noise" | "noise_sigma" => d.noise_sigma = v,
                other => return Err(Error::invalid(format!("unknown domain key {other:?}"))),
            }
        }
        d.validate()?;
        Ok(d)
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "z={};density={};keep={};noise={}",
            self.z_offset, self.density_factor, self.keep_fraction, self.noise_sigma
        )
    }
}

// Sub-streams of the domain seed beyond the per-object ones.
const NOISE_STREAM: u64 = u64::MAX - 1;
const SUBSAMPLE_STREAM: u64 = u64::MAX - 2;

/// Move `lc` into domain `dom`. The steps always run in this order:
///
/// 1. density: every object (and the ground) is re-sampled on its surface to
///    `round(density_factor · n)` points, `n` being its current count;
/// 2. noise: isotropic Gaussian noise with `noise_sigma` on every coordinate;
/// 3. shift: all points move by `(0, 0, z_offset)`;
/// 4. sparsity: [`subsample`](crate::cloud::subsample) with `keep_fraction`.
///
/// Steps whose parameter is neutral are skipped, so the identity domain
/// returns an exact copy. Object ids follow their points.
pub fn apply_domain(lc: &LabeledCloud, dom: &DomainSpec, seed: u64) -> Result<LabeledCloud> {
    dom.validate()?;
    let mut out = lc.clone();

    if dom.density_factor != 1.0 {
        let counts = lc.points_per_object();
        let n_ground = lc.object_ids.iter().filter(|&&id| id == GROUND_ID).count();
        let mut xyz = Vec::new();
        let mut ids = Vec::new();
        for (k, obj) in lc.objects.iter().enumerate() {
            let n = (dom.density_factor * counts[k] as f64).round() as usize;
            let pts = sample_object(obj, n, lc.surface_noise, &mut rng::stream(seed, object_stream(k)));
            ids.extend(std::iter::repeat_n(k as i32, pts.len()));
            xyz.extend(pts);
        }
        if let Some(g) = &lc.ground {
            let n = (dom.density_factor * n_ground as f64).round() as usize;
            let pts = sample_ground(g, n, lc.surface_noise, &mut rng::stream(seed, GROUND_STREAM));
            ids.extend(std::iter::repeat_n(GROUND_ID, pts.len()));
            xyz.extend(pts);
        }
        out.cloud = PointCloud::new(xyz, None, lc.cloud.frame_id())?;
        out.object_ids = ids;
    }

    if dom.noise_sigma > 0.0 {
        let mut r = rng::stream(seed, NOISE_STREAM);
        let xyz = out
            .cloud
            .xyz()
            .iter()
            .map(|&p| super::scene::jitter(p, dom.noise_sigma, &mut r))
            .collect();
        out.cloud = PointCloud::new(xyz, out.cloud.intensity().map(<[f64]>::to_vec), out.cloud.frame_id())?;
    }

    if dom.z_offset != 0.0 {
        out.cloud = out.cloud.translated([0.0, 0.0, dom.z_offset]);
        for o in &mut out.objects {
            o.center[2] += dom.z_offset;
        }
        if let Some(g) = &mut out.ground {
            g.z += dom.z_offset;
        }
    }

    if dom.keep_fraction < 1.0 {
        let keep = subsample_indices(out.cloud.len(), dom.keep_fraction, rng::derive(seed, SUBSAMPLE_STREAM))?;
        out.cloud = out.cloud.select(&keep);
        out.object_ids = keep.iter().map(|&k| out.object_ids[k]).collect();
    }
    Ok(out)
}
