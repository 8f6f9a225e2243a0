//! PCA surface normals, oriented toward the sensor.

use super::blob::neighborhood_cov;
use super::eig::eig_sym3;
use crate::error::Result;

/// Normal fallback for neighborhoods with fewer than three points.
pub const FALLBACK_NORMAL: [f64; 3] = [0.0, 0.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceNormal {
    pub normal: [f64; 3],
    /// `λ_min / (λ₁ + λ₂ + λ₃)`; 0 for a zero-trace covariance.
    pub curvature: f64,
    /// Fewer than three points: `normal` is [`FALLBACK_NORMAL`].
    pub degenerate: bool,
}

impl SurfaceNormal {
    /// `[nx, ny, nz, curvature]`.
    pub fn to_array(&self) -> [f64; 4] {
        let [x, y, z] = self.normal;
        [x, y, z, self.curvature]
    }
}

pub fn surface_normal_descriptor(pts: &[[f64; 3]], sensor_origin: [f64; 3]) -> Result<SurfaceNormal> {
    let cov = neighborhood_cov(pts)?;
    if pts.len() < 3 {
        return Ok(SurfaceNormal {
            normal: FALLBACK_NORMAL,
            curvature: 0.0,
            degenerate: true,
        });
    }
    let eig = eig_sym3(&cov)?;
    let trace: f64 = eig.values.iter().sum();
    let curvature = if trace > 0.0 { (eig.values[0] / trace).max(0.0) } else { 0.0 };

    let n = pts.len() as f64;
    let mut mu = [0.0; 3];
    for p in pts {
        for a in 0..3 {
            mu[a] += p[a] / n;
        }
    }
    let mut normal = eig.vectors[0];
    let toward: f64 = (0..3).map(|a| normal[a] * (sensor_origin[a] - mu[a])).sum();
    if toward < 0.0 {
        normal = normal.map(|v| -v);
    }
    Ok(SurfaceNormal {
        normal,
        curvature,
        degenerate: false,
    })
}
