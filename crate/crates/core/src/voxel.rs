//! Sparse voxelization and occupancy diagnostics.
//!
//! Cells are half-open boxes `[min + i·size, min + (i+1)·size)` indexed by
//! `floor((p − range_min) / voxel_size)`. Only occupied cells are stored.
//! Membership lists keep point indices in ascending original order and are
//! truncated to the first `max_points_per_voxel` entries.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Default per-voxel capacity.
pub const DEFAULT_MAX_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    range_min: [f64; 3],
    range_max: [f64; 3],
    voxel_size: [f64; 3],
    max_points_per_voxel: usize,
    extent: [u32; 3],
}

impl GridSpec {
    pub fn new(
        range_min: [f64; 3],
        range_max: [f64; 3],
        voxel_size: [f64; 3],
        max_points_per_voxel: usize,
    ) -> Result<Self> {
        let mut extent = [0u32; 3];
        for a in 0..3 {
            let (lo, hi, s) = (range_min[a], range_max[a], voxel_size[a]);
            if !(lo.is_finite() && hi.is_finite() && s.is_finite()) {
                return Err(Error::invalid("grid bounds must be finite"));
            }
            if !(lo < hi) {
                return Err(Error::invalid(format!("range_min[{a}] = {lo} ≥ range_max[{a}] = {hi}")));
            }
            if !(s > 0.0) {
                return Err(Error::invalid(format!("voxel_size[{a}] = {s} must be positive")));
            }
            let cells = ((hi - lo) / s).ceil();
            if cells > u32::MAX as f64 {
                return Err(Error::invalid(format!("axis {a} needs {cells} cells, over the 32-bit limit")));
            }
            extent[a] = (cells as u32).max(1);
        }
        if max_points_per_voxel == 0 {
            return Err(Error::invalid("max_points_per_voxel must be positive"));
        }
        Ok(GridSpec {
            range_min,
            range_max,
            voxel_size,
            max_points_per_voxel,
            extent,
        })
    }

    /// `[xmin, ymin, zmin, xmax, ymax, zmax]` form.
    pub fn from_range(range: [f64; 6], voxel_size: [f64; 3], max_points_per_voxel: usize) -> Result<Self> {
        GridSpec::new(
            [range[0], range[1], range[2]],
            [range[3], range[4], range[5]],
            voxel_size,
            max_points_per_voxel,
        )
    }

    /// Waymo-style detector grid: x, y ∈ [−75.2, 75.2) m, z ∈ [−2, 4) m,
    /// voxels of 0.1 × 0.1 × 0.15 m.
    pub fn waymo(max_points_per_voxel: usize) -> Self {
        GridSpec::from_range([-75.2, -75.2, -2.0, 75.2, 75.2, 4.0], [0.1, 0.1, 0.15], max_points_per_voxel)
            .expect("valid preset")
    }

    pub fn range_min(&self) -> [f64; 3] {
        self.range_min
    }

    pub fn range_max(&self) -> [f64; 3] {
        self.range_max
    }

    pub fn voxel_size(&self) -> [f64; 3] {
        self.voxel_size
    }

    pub fn max_points_per_voxel(&self) -> usize {
        self.max_points_per_voxel
    }

    /// Cells per axis.
    pub fn extent(&self) -> [u32; 3] {
        self.extent
    }

    /// Same grid with both range corners moved by `offset`.
    pub fn shifted(&self, offset: [f64; 3]) -> Result<Self> {
        let add = |v: [f64; 3]| [v[0] + offset[0], v[1] + offset[1], v[2] + offset[2]];
        GridSpec::new(add(self.range_min), add(self.range_max), self.voxel_size, self.max_points_per_voxel)
    }

    pub fn with_voxel_size(&self, voxel_size: [f64; 3]) -> Result<Self> {
        GridSpec::new(self.range_min, self.range_max, voxel_size, self.max_points_per_voxel)
    }

    pub fn with_max_points(&self, k: usize) -> Result<Self> {
        GridSpec::new(self.range_min, self.range_max, self.voxel_size, k)
    }

    /// Center of cell `c`.
    pub fn voxel_center(&self, c: VoxelCoord) -> [f64; 3] {
        let idx = [c.ix, c.iy, c.iz];
        std::array::from_fn(|a| self.range_min[a] + (idx[a] as f64 + 0.5) * self.voxel_size[a])
    }

    /// Cell containing `p`, or `None` when `p` lies outside `[range_min, range_max)`.
    pub fn voxel_index(&self, p: [f64; 3]) -> Option<VoxelCoord> {
        let mut idx = [0u32; 3];
        for a in 0..3 {
            let v = p[a];
            if !(v >= self.range_min[a] && v < self.range_max[a]) {
                return None;
            }
            let i = ((v - self.range_min[a]) / self.voxel_size[a]).floor();
            // Rounding can push a point just below range_max onto the extent.
            idx[a] = (i as u32).min(self.extent[a] - 1);
        }
        Some(VoxelCoord {
            ix: idx[0],
            iy: idx[1],
            iz: idx[2],
        })
    }
}

/// Integer cell index. Ordering is lexicographic in `(ix, iy, iz)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VoxelCoord {
    pub ix: u32,
    pub iy: u32,
    pub iz: u32,
}

impl VoxelCoord {
    pub fn new(ix: u32, iy: u32, iz: u32) -> Self {
        VoxelCoord { ix, iy, iz }
    }
}

/// Out-of-range signal of [`voxel_index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutOfRange;

pub fn voxel_index(p: [f64; 3], spec: &GridSpec) -> Result<VoxelCoord, OutOfRange> {
    spec.voxel_index(p).ok_or(OutOfRange)
}

/// Occupied voxels of one cloud, in ascending [`VoxelCoord`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelSet {
    spec: GridSpec,
    coords: Vec<VoxelCoord>,
    /// CSR offsets into `members`; `offsets.len() == coords.len() + 1`.
    offsets: Vec<usize>,
    members: Vec<u32>,
    lookup: HashMap<VoxelCoord, usize>,
    source_count: usize,
    dropped: usize,
    truncated: usize,
}

impl VoxelSet {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Number of occupied voxels.
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn source_count(&self) -> usize {
        self.source_count
    }

    /// Points outside the grid range.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// In-range points discarded because their voxel was full.
    pub fn truncated(&self) -> usize {
        self.truncated
    }

    pub fn coords(&self) -> &[VoxelCoord] {
        &self.coords
    }

    pub fn coord(&self, k: usize) -> VoxelCoord {
        self.coords[k]
    }

    /// Point indices of the `k`-th voxel.
    pub fn members(&self, k: usize) -> &[u32] {
        &self.members[self.offsets[k]..self.offsets[k + 1]]
    }

    pub fn get(&self, c: VoxelCoord) -> Option<&[u32]> {
        self.lookup.get(&c).map(|&k| self.members(k))
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (VoxelCoord, &[u32])> + '_ {
        (0..self.len()).map(move |k| (self.coords[k], self.members(k)))
    }
}

/// Group in-range points of `cloud` by cell.
///
/// Cell keys are computed in parallel and the `(cell, index)` pairs are
/// sorted, so the result does not depend on the number of worker threads.
pub fn voxelize(cloud: &PointCloud, spec: &GridSpec) -> VoxelSet {
    let xyz = cloud.xyz();
    assert!(xyz.len() <= u32::MAX as usize, "cloud too large for 32-bit point indices");
    let mut keyed: Vec<(VoxelCoord, u32)> = xyz
        .par_iter()
        .enumerate()
        .filter_map(|(k, &p)| spec.voxel_index(p).map(|c| (c, k as u32)))
        .collect();
    let dropped = xyz.len() - keyed.len();
    keyed.par_sort_unstable();

    let k_max = spec.max_points_per_voxel;
    let mut coords = Vec::new();
    let mut offsets = vec![0];
    let mut members = Vec::with_capacity(keyed.len());
    let mut truncated = 0;
    for run in keyed.chunk_by(|a, b| a.0 == b.0) {
        coords.push(run[0].0);
        members.extend(run.iter().take(k_max).map(|&(_, k)| k));
        truncated += run.len().saturating_sub(k_max);
        offsets.push(members.len());
    }
    let lookup = coords.iter().enumerate().map(|(k, &c)| (c, k)).collect();
    VoxelSet {
        spec: *spec,
        coords,
        offsets,
        members,
        lookup,
        source_count: xyz.len(),
        dropped,
        truncated,
    }
}

/// Map from member count to the number of voxels with that count.
pub fn occupancy_histogram(vs: &VoxelSet) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for k in 0..vs.len() {
        *hist.entry(vs.members(k).len()).or_insert(0) += 1;
    }
    hist
}

/// Share of voxels holding at most `n` points; 0 for an empty histogram.
pub fn fraction_at_most(hist: &BTreeMap<usize, usize>, n: usize) -> f64 {
    let total: usize = hist.values().sum();
    if total == 0 {
        return 0.0;
    }
    hist.range(..=n).map(|(_, c)| c).sum::<usize>() as f64 / total as f64
}
