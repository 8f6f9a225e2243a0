//! Voxelize-and-encode throughput.

use std::time::Instant;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::descriptors::{encode_feature_set, encode_voxels, EncoderSpec};
use crate::error::{Error, Result};
use crate::rng;
use crate::synthetic::{generate_scene, SceneSpec};
use crate::voxel::{voxelize, GridSpec};

/// A scan-sized synthetic cloud of exactly `n` points: a dense street scene
/// over the full Waymo-style range, sampled down to `n`.
pub fn bench_cloud(n: usize, seed: u64) -> Result<PointCloud> {
    let spec = SceneSpec {
        cars: 40,
        pedestrians: 40,
        cyclists: 40,
        placement: [-70.0, -70.0, 70.0, 70.0],
        points_per_m2: 100.0,
        ground_points_per_m2: 4.0,
        min_gap: 0.2,
        ..SceneSpec::default()
    };
    let lc = generate_scene(&spec, seed)?;
    let len = lc.cloud.len();
    if len < n {
        return Err(Error::invalid(format!("bench scene has only {len} points, {n} requested")));
    }
    let mut keep = index::sample(&mut rng::stream(seed, 1), len, n).into_vec();
    keep.sort_unstable();
    Ok(lc.cloud.select(&keep))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub points: usize,
    pub rows: usize,
    pub threads: usize,
    /// Best wall time over the repetitions, seconds.
    pub secs_single: f64,
    pub secs_multi: f64,
    pub speedup: f64,
    /// Container bytes agree between the two thread counts.
    pub identical: bool,
}

impl BenchResult {
    pub fn points_per_sec_single(&self) -> f64 {
        self.points as f64 / self.secs_single
    }

    pub fn points_per_sec_multi(&self) -> f64 {
        self.points as f64 / self.secs_multi
    }
}

fn timed(cloud: &PointCloud, grid: &GridSpec, enc: &EncoderSpec, threads: usize, reps: usize) -> Result<(f64, Vec<u8>, usize)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let mut best = f64::INFINITY;
    let mut bytes = Vec::new();
    let mut rows = 0;
    for _ in 0..reps.max(1) {
        let t0 = Instant::now();
        let fs = pool.install(|| {
            let vs = voxelize(cloud, grid);
            encode_voxels(cloud, &vs, enc)
        })?;
        best = best.min(t0.elapsed().as_secs_f64());
        bytes = encode_feature_set(&fs);
        rows = fs.len();
    }
    Ok((best, bytes, rows))
}

/// Time voxelize+encode on 1 and on `threads` threads.
pub fn run_bench(cloud: &PointCloud, grid: &GridSpec, enc: &EncoderSpec, threads: usize, reps: usize) -> Result<BenchResult> {
    if threads == 0 {
        return Err(Error::invalid("threads must be positive"));
    }
    let (secs_single, one, _) = timed(cloud, grid, enc, 1, reps)?;
    let (secs_multi, many, rows) = timed(cloud, grid, enc, threads, reps)?;
    Ok(BenchResult {
        points: cloud.len(),
        rows,
        threads,
        secs_single,
        secs_multi,
        speedup: secs_single / secs_multi,
        identical: one == many,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bench_cloud_has_exact_size_and_is_seeded() {
        let a = bench_cloud(20_000, 3).unwrap();
        assert_eq!(a.len(), 20_000);
        assert_eq!(a, bench_cloud(20_000, 3).unwrap());
        let r = run_bench(&a, &GridSpec::waymo(5), &EncoderSpec::gblobs(), 2, 1).unwrap();
        assert!(r.identical);
    }
}
