//! Voxel-to-object pooling.

use std::fmt;
use std::str::FromStr;

use crate::descriptors::FeatureSet;
use crate::error::{Error, Result};
use crate::synthetic::{LabeledCloud, GROUND_ID};
use crate::voxel::VoxelSet;

/// How voxel rows of one object are reduced to a single row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Pooling {
    Mean,
    Max,
    /// Mean block followed by max block.
    MeanMax,
    /// Mean, max and min blocks.
    #[default]
    MeanMaxMin,
}

impl Pooling {
    pub fn width(self, feature_width: usize) -> usize {
        match self {
            Pooling::Mean | Pooling::Max => feature_width,
            Pooling::MeanMax => 2 * feature_width,
            Pooling::MeanMaxMin => 3 * feature_width,
        }
    }
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pooling::Mean => "mean",
            Pooling::Max => "max",
            Pooling::MeanMax => "mean+max",
            Pooling::MeanMaxMin => "mean+max+min",
        })
    }
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Pooling::Mean),
            "max" => Ok(Pooling::Max),
            "mean+max" => Ok(Pooling::MeanMax),
            "mean+max+min" => Ok(Pooling::MeanMaxMin),
            _ => Err(Error::invalid(format!("unknown pooling {s:?}"))),
        }
    }
}

/// Object-level rows with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    width: usize,
    values: Vec<f64>,
    labels: Vec<usize>,
    /// Encoder label and pooling that produced the rows.
    pub feature_meta: String,
    /// Objects dropped because no voxel was assigned to them.
    pub skipped_objects: usize,
}

impl DesignMatrix {
    pub fn new(width: usize, values: Vec<f64>, labels: Vec<usize>, feature_meta: impl Into<String>) -> Result<Self> {
        if values.len() != width * labels.len() {
            return Err(Error::invalid(format!(
                "{} values do not fill {} rows of width {width}",
                values.len(),
                labels.len()
            )));
        }
        Ok(DesignMatrix {
            width,
            values,
            labels,
            feature_meta: feature_meta.into(),
            skipped_objects: 0,
        })
    }

    pub fn empty(width: usize, feature_meta: impl Into<String>) -> Self {
        DesignMatrix::new(width, Vec::new(), Vec::new(), feature_meta).expect("empty matrix")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.width..(k + 1) * self.width]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |k| self.row(k))
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of classes implied by the labels (`max + 1`).
    pub fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// Append the rows of `other`, which must have the same width.
    pub fn append(&mut self, other: &DesignMatrix) -> Result<()> {
        if other.width != self.width {
            return Err(Error::invalid(format!("width {} cannot join width {}", other.width, self.width)));
        }
        self.values.extend_from_slice(&other.values);
        self.labels.extend_from_slice(&other.labels);
        self.skipped_objects += other.skipped_objects;
        Ok(())
    }
}

/// Object owning the majority of `members`; ties go to the lower id, so a
/// tie with ground ([`GROUND_ID`]) counts as ground.
pub fn majority_object(members: &[u32], object_ids: &[i32]) -> i32 {
    let mut ids: Vec<i32> = members.iter().map(|&k| object_ids[k as usize]).collect();
    ids.sort_unstable();
    let mut best = (0usize, GROUND_ID);
    for run in ids.chunk_by(|a, b| a == b) {
        if run.len() > best.0 {
            best = (run.len(), run[0]);
        }
    }
    best.1
}

fn owners(vs: &VoxelSet, lc: &LabeledCloud) -> Result<Vec<i32>> {
    if vs.source_count() != lc.object_ids.len() {
        return Err(Error::invalid("voxel set was not built from this labeled cloud"));
    }
    Ok((0..vs.len()).map(|k| majority_object(vs.members(k), &lc.object_ids)).collect())
}

/// Pool the voxel rows of `fs` into one row per object of `lc`.
///
/// Each voxel goes to [`majority_object`]; ground voxels are left out. Rows
/// are emitted in object-id order and objects without voxels are skipped
/// and counted in [`DesignMatrix::skipped_objects`].
pub fn pool_object_features(fs: &FeatureSet, vs: &VoxelSet, lc: &LabeledCloud, pooling: Pooling) -> Result<DesignMatrix> {
    if fs.coords() != vs.coords() {
        return Err(Error::invalid("feature set and voxel set are not aligned"));
    }
    let owner = owners(vs, lc)?;
    let w = fs.width();
    let n_obj = lc.objects.len();
    let mut sum = vec![0.0; n_obj * w];
    let mut max = vec![f64::NEG_INFINITY; n_obj * w];
    let mut min = vec![f64::INFINITY; n_obj * w];
    let mut count = vec![0usize; n_obj];
    for (k, &o) in owner.iter().enumerate() {
        if o == GROUND_ID {
            continue;
        }
        let o = o as usize;
        count[o] += 1;
        for (j, v) in fs.row(k).iter().enumerate() {
            sum[o * w + j] += v;
            max[o * w + j] = max[o * w + j].max(*v);
            min[o * w + j] = min[o * w + j].min(*v);
        }
    }

    let out_w = pooling.width(w);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut skipped = 0;
    for o in 0..n_obj {
        if count[o] == 0 {
            skipped += 1;
            continue;
        }
        let n = count[o] as f64;
        let block = o * w..(o + 1) * w;
        if pooling != Pooling::Max {
            values.extend(sum[block.clone()].iter().map(|s| s / n));
        }
        if pooling != Pooling::Mean {
            values.extend_from_slice(&max[block.clone()]);
        }
        if pooling == Pooling::MeanMaxMin {
            values.extend_from_slice(&min[block]);
        }
        labels.push(lc.objects[o].class.index());
    }
    let mut dm = DesignMatrix::new(out_w, values, labels, format!("{}|{pooling}", fs.spec().label()))?;
    dm.skipped_objects = skipped;
    Ok(dm)
}
