//! Per-voxel feature encoders and the row-aligned [`FeatureSet`].

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::blob::{gaussian_blob, rel_distance_descriptor, BlobAux, DMode, GBlob};
use super::normal::surface_normal_descriptor;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::voxel::{voxelize, GridSpec, VoxelCoord, VoxelSet};

/// One block of an encoder's output row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    /// Neighborhood mean in sensor coordinates (the global-coordinate baseline).
    GlobalMean,
    /// Local-frame mean `d`.
    LocalMean,
    /// Covariance `Σ`.
    Covariance,
    /// `d` then `Σ`.
    GBlobs,
    /// Mean and max absolute centroid offset.
    RelDistance,
    /// PCA normal and curvature (always 3-D).
    SurfaceNormal,
}

impl Feature {
    pub const ALL: [Feature; 6] = [
        Feature::GlobalMean,
        Feature::LocalMean,
        Feature::Covariance,
        Feature::GBlobs,
        Feature::RelDistance,
        Feature::SurfaceNormal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::GlobalMean => "global",
            Feature::LocalMean => "d",
            Feature::Covariance => "sigma",
            Feature::GBlobs => "gblobs",
            Feature::RelDistance => "rel_distance",
            Feature::SurfaceNormal => "surface_normal",
        }
    }

    /// Block width for point dimension `m` (3 or 4).
    pub fn width(self, m: usize, compact_sigma: bool) -> usize {
        let sigma = if compact_sigma { m * (m + 1) / 2 } else { m * m };
        match self {
            Feature::GlobalMean | Feature::LocalMean => m,
            Feature::Covariance => sigma,
            Feature::GBlobs => m + sigma,
            Feature::RelDistance => 2 * m,
            Feature::SurfaceNormal => 4,
        }
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "global" | "global_mean" | "mean" => Feature::GlobalMean,
            "d" | "local_mean" => Feature::LocalMean,
            "sigma" | "cov" | "covariance" | "Σ" => Feature::Covariance,
            "gblobs" | "d+sigma" => Feature::GBlobs,
            "rel_distance" | "rel" => Feature::RelDistance,
            "surface_normal" | "normal" | "normals" => Feature::SurfaceNormal,
            other => return Err(Error::invalid(format!("unknown feature {other:?}"))),
        })
    }
}

/// Which features to emit per voxel, and how.
///
/// The textual form is `feature[+feature...]` optionally followed by
/// `;key=value` options, for example `global+sigma` or
/// `gblobs;d_mode=padded:8;intensity=1`. Recognized options are
/// `d_mode` (`literal`, `padded`, `padded:K`, `voxel_center`), `intensity`
/// (0/1), `compact` (0/1, upper-triangle `Σ`) and `origin=x,y,z` (sensor
/// origin for normal orientation). [`Display`](fmt::Display) writes every
/// option that differs from its default.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderSpec {
    features: Vec<Feature>,
    pub d_mode: DMode,
    /// Buffer capacity for [`DMode::Padded`]; `None` uses the grid's
    /// `max_points_per_voxel`.
    pub capacity: Option<usize>,
    pub include_intensity: bool,
    pub compact_sigma: bool,
    pub sensor_origin: [f64; 3],
}

impl EncoderSpec {
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::invalid("encoder needs at least one feature"));
        }
        for (i, f) in features.iter().enumerate() {
            if features[..i].contains(f) {
                return Err(Error::invalid(format!("feature {} listed twice", f.name())));
            }
        }
        Ok(EncoderSpec {
            features,
            d_mode: DMode::default(),
            capacity: None,
            include_intensity: false,
            compact_sigma: false,
            sensor_origin: [0.0; 3],
        })
    }

    pub fn single(feature: Feature) -> Self {
        EncoderSpec::new(vec![feature]).expect("one feature")
    }

    pub fn gblobs() -> Self {
        EncoderSpec::single(Feature::GBlobs)
    }

    pub fn global_mean() -> Self {
        EncoderSpec::single(Feature::GlobalMean)
    }

    pub fn with_d_mode(mut self, mode: DMode) -> Self {
        self.d_mode = mode;
        self
    }

    pub fn with_intensity(mut self, on: bool) -> Self {
        self.include_intensity = on;
        self
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    /// Point dimension used by the statistics: 3, or 4 with intensity.
    pub fn point_dims(&self) -> usize {
        if self.include_intensity {
            4
        } else {
            3
        }
    }

    pub fn width(&self) -> usize {
        let m = self.point_dims();
        self.features.iter().map(|f| f.width(m, self.compact_sigma)).sum()
    }

    /// Feature list without options, e.g. `global+sigma`.
    pub fn label(&self) -> String {
        self.features.iter().map(|f| f.name()).collect::<Vec<_>>().join("+")
    }

    fn needs_blob(&self) -> bool {
        self.features
            .iter()
            .any(|f| matches!(f, Feature::GlobalMean | Feature::LocalMean | Feature::Covariance | Feature::GBlobs))
    }
}

impl fmt::Display for EncoderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())?;
        if self.d_mode != DMode::default() || self.capacity.is_some() {
            write!(f, ";d_mode={}", self.d_mode)?;
            if let Some(k) = self.capacity {
                write!(f, ":{k}")?;
            }
        }
        if self.include_intensity {
            f.write_str(";intensity=1")?;
        }
        if self.compact_sigma {
            f.write_str(";compact=1")?;
        }
        if self.sensor_origin != [0.0; 3] {
            let [x, y, z] = self.sensor_origin;
            write!(f, ";origin={x},{y},{z}")?;
        }
        Ok(())
    }
}

impl FromStr for EncoderSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(';');
        let head = parts.next().unwrap_or_default();
        // "d+sigma" names the gblobs layout; keep it as one feature.
        let features = if head.trim() == "d+sigma" {
            vec![Feature::GBlobs]
        } else {
            head.split('+').map(str::parse).collect::<Result<Vec<_>>>()?
        };
        let mut spec = EncoderSpec::new(features)?;
        for opt in parts {
            let (key, value) = opt
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("encoder option {opt:?} is not key=value")))?;
            let flag = |v: &str| match v {
                "1" | "true" => Ok(true),
                "0" | "false" => Ok(false),
                _ => Err(Error::invalid(format!("option {key} expects 0 or 1, got {v:?}"))),
            };
            match key.trim() {
                "d_mode" => {
                    let (mode, cap) = parse_d_mode(value)?;
                    spec.d_mode = mode;
                    spec.capacity = cap;
                }
                "intensity" => spec.include_intensity = flag(value)?,
                "compact" => spec.compact_sigma = flag(value)?,
                "origin" => {
                    let v: Vec<f64> = value
                        .split(',')
                        .map(|x| x.trim().parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| Error::invalid(format!("bad origin {value:?}: {e}")))?;
                    if v.len() != 3 {
                        return Err(Error::invalid("origin needs three values"));
                    }
                    spec.sensor_origin = [v[0], v[1], v[2]];
                }
                other => return Err(Error::invalid(format!("unknown encoder option {other:?}"))),
            }
        }
        Ok(spec)
    }
}

/// `literal`, `padded`, `padded:K` or `voxel_center`.
pub fn parse_d_mode(s: &str) -> Result<(DMode, Option<usize>)> {
    match s.split_once(':') {
        Some((mode, k)) => {
            let mode: DMode = mode.parse()?;
            if mode != DMode::Padded {
                return Err(Error::invalid(format!("only padded takes a capacity, got {s:?}")));
            }
            let k = k
                .parse::<usize>()
                .ok()
                .filter(|&k| k > 0)
                .ok_or_else(|| Error::invalid(format!("bad capacity in {s:?}")))?;
            Ok((mode, Some(k)))
        }
        None => Ok((s.parse()?, None)),
    }
}

/// One row per occupied voxel, in ascending [`VoxelCoord`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    spec: EncoderSpec,
    width: usize,
    coords: Vec<VoxelCoord>,
    values: Vec<f64>,
}

impl FeatureSet {
    pub fn new(spec: EncoderSpec, coords: Vec<VoxelCoord>, values: Vec<f64>) -> Result<Self> {
        let width = spec.width();
        if values.len() != coords.len() * width {
            return Err(Error::invalid(format!(
                "{} values do not fill {} rows of width {width}",
                values.len(),
                coords.len()
            )));
        }
        Ok(FeatureSet {
            spec,
            width,
            coords,
            values,
        })
    }

    pub fn spec(&self) -> &EncoderSpec {
        &self.spec
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[VoxelCoord] {
        &self.coords
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.width..(k + 1) * self.width]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |k| self.row(k))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Voxelize `cloud` and encode every occupied voxel.
pub fn encode_cloud(cloud: &PointCloud, grid: &GridSpec, enc: &EncoderSpec) -> Result<FeatureSet> {
    encode_voxels(cloud, &voxelize(cloud, grid), enc)
}

/// Encode the voxels of an existing [`VoxelSet`] built from `cloud`.
///
/// Rows are computed in parallel into preallocated slots.
pub fn encode_voxels(cloud: &PointCloud, vs: &VoxelSet, enc: &EncoderSpec) -> Result<FeatureSet> {
    if vs.source_count() != cloud.len() {
        return Err(Error::invalid(format!(
            "voxel set built from {} points, cloud has {}",
            vs.source_count(),
            cloud.len()
        )));
    }
    if enc.include_intensity && cloud.dims() != 4 {
        return Err(Error::invalid("encoder wants intensity but the cloud has none"));
    }
    let capacity = enc.capacity.unwrap_or(vs.spec().max_points_per_voxel());
    if enc.d_mode == DMode::Padded && capacity < vs.spec().max_points_per_voxel() {
        return Err(Error::invalid(format!(
            "padded capacity {capacity} is below the grid's {} points per voxel",
            vs.spec().max_points_per_voxel()
        )));
    }
    let width = enc.width();
    let mut values = vec![0.0; vs.len() * width];
    if width > 0 && !vs.is_empty() {
        values
            .par_chunks_mut(width)
            .enumerate()
            .try_for_each_init(Vec::new, |scratch, (k, row)| {
                let center = vs.spec().voxel_center(vs.coord(k));
                encode_one(cloud, vs.members(k), center, capacity, enc, scratch, row)
            })?;
    }
    FeatureSet::new(enc.clone(), vs.coords().to_vec(), values)
}

fn encode_one(
    cloud: &PointCloud,
    members: &[u32],
    center: [f64; 3],
    capacity: usize,
    enc: &EncoderSpec,
    scratch: &mut Vec<f64>,
    row: &mut [f64],
) -> Result<()> {
    scratch.clear();
    if enc.include_intensity {
        let pts: Vec<[f64; 4]> = members.iter().map(|&k| cloud.xyzi(k as usize)).collect();
        let [cx, cy, cz] = center;
        write_row(&pts, [cx, cy, cz, 0.0], capacity, enc, cloud, members, scratch)?;
    } else {
        let pts: Vec<[f64; 3]> = members.iter().map(|&k| cloud.xyz()[k as usize]).collect();
        write_row(&pts, center, capacity, enc, cloud, members, scratch)?;
    }
    row.copy_from_slice(scratch);
    Ok(())
}

fn write_row<const M: usize>(
    pts: &[[f64; M]],
    center: [f64; M],
    capacity: usize,
    enc: &EncoderSpec,
    cloud: &PointCloud,
    members: &[u32],
    out: &mut Vec<f64>,
) -> Result<()> {
    let blob = if enc.needs_blob() {
        let aux = BlobAux {
            capacity: Some(capacity),
            center: Some(center),
        };
        Some(gaussian_blob(pts, enc.d_mode, aux)?)
    } else {
        None
    };
    let push_sigma = |out: &mut Vec<f64>, b: &GBlob<M>| {
        if enc.compact_sigma {
            out.extend(b.sigma_upper());
        } else {
            out.extend(b.sigma_flat());
        }
    };
    for feature in enc.features() {
        match feature {
            Feature::GlobalMean => {
                let mu = super::blob::neighborhood_mean(pts)?;
                out.extend_from_slice(&mu);
            }
            Feature::LocalMean => out.extend_from_slice(&blob.expect("blob computed").d),
            Feature::Covariance => push_sigma(out, blob.as_ref().expect("blob computed")),
            Feature::GBlobs => {
                let b = blob.as_ref().expect("blob computed");
                out.extend_from_slice(&b.d);
                push_sigma(out, b);
            }
            Feature::RelDistance => out.extend(rel_distance_descriptor(pts)?.to_vec()),
            Feature::SurfaceNormal => {
                let xyz: Vec<[f64; 3]> = members.iter().map(|&k| cloud.xyz()[k as usize]).collect();
                out.extend(surface_normal_descriptor(&xyz, enc.sensor_origin)?.to_array());
            }
        }
    }
    Ok(())
}
