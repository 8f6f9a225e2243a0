//! Neighborhood statistics and the Gaussian-blob descriptor.
//!
//! A neighborhood of `N` points `p_i ∈ R^M` is summarized by its mean
//! `μ = (1/N) Σ p_i` and population covariance
//! `Σ = (1/N) Σ (p_i − μ)(p_i − μ)ᵀ`. The descriptor is the pair `(d, Σ)`,
//! where `d` expresses the mean in a frame local to the neighborhood (see
//! [`DMode`]). Flattened, it has `M + M²` entries: `d` first, then `Σ`
//! row-major.
//!
//! All sums are accumulated in `f64`. The covariance is computed in two
//! passes (center, then accumulate outer products), which keeps it exact
//! under large translations where `E[xxᵀ] − μμᵀ` would cancel badly.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How the local-frame mean `d` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DMode {
    /// `d = (1/N) Σ (p_i − μ)`. Analytically zero; evaluated anyway.
    Literal,
    /// `d = (1/K) Σ (p_i − μ)` over the `N` real points of a buffer with
    /// capacity `K`, the `K − N` zero slots adding nothing to the sum.
    #[default]
    Padded,
    /// `d = μ − c` for the center `c` of the enclosing voxel.
    VoxelCenter,
}

impl fmt::Display for DMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DMode::Literal => "literal",
            DMode::Padded => "padded",
            DMode::VoxelCenter => "voxel_center",
        })
    }
}

impl FromStr for DMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(DMode::Literal),
            "padded" => Ok(DMode::Padded),
            "voxel_center" | "voxel-center" | "center" => Ok(DMode::VoxelCenter),
            _ => Err(Error::invalid(format!("unknown d mode {s:?}"))),
        }
    }
}

/// Extra inputs some [`DMode`]s need.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlobAux<const M: usize> {
    /// Buffer capacity `K` for [`DMode::Padded`].
    pub capacity: Option<usize>,
    /// Voxel center for [`DMode::VoxelCenter`].
    pub center: Option<[f64; M]>,
}

/// `(d, Σ)` for one neighborhood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GBlob<const M: usize> {
    pub d: [f64; M],
    pub sigma: [[f64; M]; M],
}

impl<const M: usize> GBlob<M> {
    /// Flattened length, `M + M²`.
    pub const WIDTH: usize = M + M * M;

    /// `d` followed by `Σ` row-major.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::WIDTH);
        v.extend_from_slice(&self.d);
        v.extend(self.sigma.iter().flatten());
        v
    }

    pub fn sigma_flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.sigma.iter().flatten().copied()
    }

    /// Upper triangle of `Σ`, row by row: `M(M+1)/2` entries.
    pub fn sigma_upper(&self) -> impl Iterator<Item = f64> + '_ {
        (0..M).flat_map(move |i| (i..M).map(move |j| self.sigma[i][j]))
    }
}

pub fn neighborhood_mean<const M: usize>(pts: &[[f64; M]]) -> Result<[f64; M]> {
    if pts.is_empty() {
        return Err(Error::EmptyNeighborhood);
    }
    let mut sum = [0.0; M];
    for p in pts {
        for a in 0..M {
            sum[a] += p[a];
        }
    }
    let n = pts.len() as f64;
    Ok(sum.map(|s| s / n))
}

/// Population covariance (divisor `N`), two-pass.
pub fn neighborhood_cov<const M: usize>(pts: &[[f64; M]]) -> Result<[[f64; M]; M]> {
    let mu = neighborhood_mean(pts)?;
    Ok(centered_cov(pts, &mu))
}

fn centered_cov<const M: usize>(pts: &[[f64; M]], mu: &[f64; M]) -> [[f64; M]; M] {
    let mut acc = [[0.0; M]; M];
    for p in pts {
        let c: [f64; M] = std::array::from_fn(|a| p[a] - mu[a]);
        for i in 0..M {
            for j in i..M {
                acc[i][j] += c[i] * c[j];
            }
        }
    }
    let n = pts.len() as f64;
    for i in 0..M {
        for j in i..M {
            acc[i][j] /= n;
            acc[j][i] = acc[i][j];
        }
    }
    acc
}

/// Gaussian-blob descriptor of one neighborhood.
pub fn gaussian_blob<const M: usize>(pts: &[[f64; M]], mode: DMode, aux: BlobAux<M>) -> Result<GBlob<M>> {
    let mu = neighborhood_mean(pts)?;
    let sigma = centered_cov(pts, &mu);
    let n = pts.len();
    let d = match mode {
        DMode::Literal => centered_sum(pts, &mu).map(|s| s / n as f64),
        DMode::Padded => {
            let k = aux
                .capacity
                .ok_or_else(|| Error::invalid("padded d mode needs a buffer capacity"))?;
            if k < n {
                return Err(Error::invalid(format!("capacity {k} is below neighborhood size {n}")));
            }
            centered_sum(pts, &mu).map(|s| s / k as f64)
        }
        DMode::VoxelCenter => {
            let c = aux
                .center
                .ok_or_else(|| Error::invalid("voxel_center d mode needs a voxel center"))?;
            std::array::from_fn(|a| mu[a] - c[a])
        }
    };
    Ok(GBlob { d, sigma })
}

fn centered_sum<const M: usize>(pts: &[[f64; M]], mu: &[f64; M]) -> [f64; M] {
    let mut s = [0.0; M];
    for p in pts {
        for a in 0..M {
            s[a] += p[a] - mu[a];
        }
    }
    s
}

/// Pooled centroid offsets: componentwise mean and max of `|p_i − μ|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelDistance<const M: usize> {
    pub mean_abs: [f64; M],
    pub max_abs: [f64; M],
}

impl<const M: usize> RelDistance<M> {
    pub fn to_vec(&self) -> Vec<f64> {
        self.mean_abs.iter().chain(&self.max_abs).copied().collect()
    }
}

pub fn rel_distance_descriptor<const M: usize>(pts: &[[f64; M]]) -> Result<RelDistance<M>> {
    let mu = neighborhood_mean(pts)?;
    let mut sum = [0.0; M];
    let mut max = [0.0f64; M];
    for p in pts {
        for a in 0..M {
            let r = (p[a] - mu[a]).abs();
            sum[a] += r;
            max[a] = max[a].max(r);
        }
    }
    let n = pts.len() as f64;
    Ok(RelDistance {
        mean_abs: sum.map(|s| s / n),
        max_abs: max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn padded(k: usize) -> BlobAux<3> {
        BlobAux {
            capacity: Some(k),
            center: None,
        }
    }

    #[test]
    fn mean_examples() {
        assert_eq!(neighborhood_mean(&[[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(neighborhood_mean(&[[1.5, -2.0, 7.25]]).unwrap(), [1.5, -2.0, 7.25]);
        assert!(matches!(neighborhood_mean::<3>(&[]), Err(Error::EmptyNeighborhood)));
    }

    #[test]
    fn mean_matches_summation_oracle() {
        let mut r = rng::seeded(11);
        let pts: Vec<[f64; 3]> = (0..1000).map(|_| std::array::from_fn(|_| r.random_range(-80.0..80.0))).collect();
        let got = neighborhood_mean(&pts).unwrap();
        for a in 0..3 {
            // Oracle: compensated summation, one axis at a time.
            let (mut s, mut c) = (0.0f64, 0.0f64);
            for p in &pts {
                let y = p[a] - c;
                let t = s + y;
                c = (t - s) - y;
                s = t;
            }
            let want = s / pts.len() as f64;
            assert!((got[a] - want).abs() <= 1e-12 * want.abs().max(1.0), "{a}: {} vs {want}", got[a]);
        }
    }

    #[test]
    fn cov_examples() {
        let c = neighborhood_cov(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(c, [[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert_eq!(neighborhood_cov(&[[3.0, 4.0, 5.0]]).unwrap(), [[0.0; 3]; 3]);
        assert!(matches!(neighborhood_cov::<3>(&[]), Err(Error::EmptyNeighborhood)));
    }

    #[test]
    fn blob_examples() {
        let sym = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]];
        let b = gaussian_blob(&sym, DMode::Padded, padded(4)).unwrap();
        assert_eq!(b.d, [0.0; 3]);
        assert_eq!(b.sigma, [[1.0, 0.0, 0.0], [0.0; 3], [0.0; 3]]);

        let aux = BlobAux {
            capacity: None,
            center: Some([0.0; 3]),
        };
        let b = gaussian_blob(&[[0.05, 0.0, 0.0]], DMode::VoxelCenter, aux).unwrap();
        assert_eq!(b.d, [0.05, 0.0, 0.0]);
        assert_eq!(b.sigma, [[0.0; 3]; 3]);

        let pts = [[10.1, -3.2, 0.7], [10.4, -3.0, 0.9], [10.2, -3.3, 0.65]];
        let b = gaussian_blob(&pts, DMode::Literal, BlobAux::default()).unwrap();
        assert!(b.d.iter().all(|v| v.abs() <= 1e-6 * 10.4));
        assert_eq!(b.to_vec().len(), 12);
    }

    #[test]
    fn blob_argument_errors() {
        let pts = [[0.0; 3]; 3];
        assert!(matches!(gaussian_blob(&pts, DMode::Padded, BlobAux::default()), Err(Error::InvalidArgument(_))));
        assert!(matches!(gaussian_blob(&pts, DMode::Padded, padded(2)), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            gaussian_blob(&pts, DMode::VoxelCenter, BlobAux::default()),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            gaussian_blob::<3>(&[], DMode::Literal, BlobAux::default()),
            Err(Error::EmptyNeighborhood)
        ));
    }

    #[test]
    fn four_dimensional_width() {
        let pts = [[0.0, 1.0, 2.0, 0.3], [1.0, 1.0, 2.5, 0.1]];
        let b = gaussian_blob(&pts, DMode::Literal, BlobAux::default()).unwrap();
        assert_eq!(b.to_vec().len(), 20);
        assert_eq!(GBlob::<4>::WIDTH, 20);
        assert_eq!(b.sigma_upper().count(), 10);
    }

    #[test]
    fn rel_distance_examples() {
        let r = rel_distance_descriptor(&[[4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(r.to_vec(), vec![0.0; 6]);
        let r = rel_distance_descriptor(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(r.mean_abs, [1.0, 0.0, 0.0]);
        assert_eq!(r.max_abs, [1.0, 0.0, 0.0]);
        assert!(matches!(rel_distance_descriptor::<3>(&[]), Err(Error::EmptyNeighborhood)));
    }

    #[test]
    fn rel_distance_matches_per_point_oracle() {
        let mut r = rng::seeded(5);
        for _ in 0..50 {
            let n = r.random_range(1..40);
            let pts: Vec<[f64; 3]> = (0..n).map(|_| std::array::from_fn(|_| r.random_range(-2.0..2.0))).collect();
            let got = rel_distance_descriptor(&pts).unwrap();
            let mu = neighborhood_mean(&pts).unwrap();
            let offsets: Vec<[f64; 3]> = pts.iter().map(|p| std::array::from_fn(|a| (p[a] - mu[a]).abs())).collect();
            for a in 0..3 {
                let mean = offsets.iter().map(|o| o[a]).sum::<f64>() / n as f64;
                let max = offsets.iter().map(|o| o[a]).fold(0.0, f64::max);
                assert_eq!(got.mean_abs[a], mean);
                assert_eq!(got.max_abs[a], max);
            }
        }
    }
}
