//! Point-cloud data model, rigid transforms and deterministic subsampling.

use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng;

/// A single LiDAR return in the sensor frame (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity: Option<f64>,
}

impl Point {
    pub fn xyz(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// An ordered list of points sharing one frame.
///
/// Coordinates are held as `f64`. Either no point carries an intensity
/// (`dims() == 3`) or every point does (`dims() == 4`); the constructor
/// rejects anything else, as well as non-finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    xyz: Vec<[f64; 3]>,
    intensity: Option<Vec<f64>>,
    frame_id: String,
}

impl PointCloud {
    pub fn new(
        xyz: Vec<[f64; 3]>,
        intensity: Option<Vec<f64>>,
        frame_id: impl Into<String>,
    ) -> Result<Self> {
        if let Some(i) = &intensity {
            if i.len() != xyz.len() {
                return Err(Error::invalid(format!(
                    "{} intensities for {} points",
                    i.len(),
                    xyz.len()
                )));
            }
            if let Some(k) = i.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("non-finite intensity at point {k}")));
            }
        }
        if let Some(k) = xyz.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::invalid(format!("non-finite coordinate at point {k}")));
        }
        Ok(PointCloud {
            xyz,
            intensity,
            frame_id: frame_id.into(),
        })
    }

    /// Cloud without intensity; panics on non-finite input.
    pub fn from_xyz(xyz: Vec<[f64; 3]>) -> Self {
        PointCloud::new(xyz, None, "sensor").expect("finite coordinates")
    }

    pub fn empty() -> Self {
        PointCloud::from_xyz(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.xyz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xyz.is_empty()
    }

    /// 3 for xyz clouds, 4 when intensity is present.
    pub fn dims(&self) -> usize {
        if self.intensity.is_some() {
            4
        } else {
            3
        }
    }

    pub fn frame_id(&self) -> &str {
        &self.frame_id
    }

    pub fn xyz(&self) -> &[[f64; 3]] {
        &self.xyz
    }

    pub fn intensity(&self) -> Option<&[f64]> {
        self.intensity.as_deref()
    }

    pub fn point(&self, k: usize) -> Point {
        let [x, y, z] = self.xyz[k];
        Point {
            x,
            y,
            z,
            intensity: self.intensity.as_ref().map(|i| i[k]),
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = Point> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }

    /// Point `k` as `[x, y, z, intensity]`; intensity is 0 for xyz clouds.
    pub fn xyzi(&self, k: usize) -> [f64; 4] {
        let [x, y, z] = self.xyz[k];
        [x, y, z, self.intensity.as_ref().map_or(0.0, |i| i[k])]
    }

    /// New cloud holding the points at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            xyz: indices.iter().map(|&k| self.xyz[k]).collect(),
            intensity: self
                .intensity
                .as_ref()
                .map(|i| indices.iter().map(|&k| i[k]).collect()),
            frame_id: self.frame_id.clone(),
        }
    }

    /// Shift every point by `offset`.
    pub fn translated(&self, offset: [f64; 3]) -> PointCloud {
        PointCloud {
            xyz: self
                .xyz
                .iter()
                .map(|p| [p[0] + offset[0], p[1] + offset[1], p[2] + offset[2]])
                .collect(),
            intensity: self.intensity.clone(),
            frame_id: self.frame_id.clone(),
        }
    }
}

/// Proper rigid motion `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

const ORTHO_TOL: f64 = 1e-9;

impl RigidTransform {
    /// Checks `RᵀR = I` and `det R = +1`, both within 1e-9.
    pub fn new(rotation: [[f64; 3]; 3], translation: [f64; 3]) -> Result<Self> {
        if rotation.iter().flatten().chain(&translation).any(|v| !v.is_finite()) {
            return Err(Error::InvalidTransform("non-finite entry".into()));
        }
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| rotation[k][i] * rotation[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > ORTHO_TOL {
                    return Err(Error::InvalidTransform(format!(
                        "rotation is not orthonormal: (RᵀR)[{i}][{j}] = {dot}"
                    )));
                }
            }
        }
        let det = det3(&rotation);
        if (det - 1.0).abs() > ORTHO_TOL {
            return Err(Error::InvalidTransform(format!("det(R) = {det}, expected +1")));
        }
        Ok(RigidTransform {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        RigidTransform {
            rotation: IDENTITY,
            translation: [0.0; 3],
        }
    }

    pub fn from_translation(t: [f64; 3]) -> Self {
        RigidTransform {
            rotation: IDENTITY,
            translation: t,
        }
    }

    /// Rotation by `angle` radians about the unit-normalized `axis` (Rodrigues).
    pub fn from_axis_angle(axis: [f64; 3], angle: f64, translation: [f64; 3]) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidTransform("rotation axis must be non-zero".into()));
        }
        let [x, y, z] = [axis[0] / n, axis[1] / n, axis[2] / n];
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let rotation = [
            [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
            [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
            [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
        ];
        RigidTransform::new(rotation, translation)
    }

    pub fn rotation(&self) -> &[[f64; 3]; 3] {
        &self.rotation
    }

    pub fn translation(&self) -> [f64; 3] {
        self.translation
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == IDENTITY && self.translation == [0.0; 3]
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2] + t[0],
            r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2] + t[1],
            r[2][0] * p[0] + r[2][1] * p[1] + r[2][2] * p[2] + t[2],
        ]
    }

    /// `p ↦ Rᵀ(p − t)`.
    pub fn inverse(&self) -> RigidTransform {
        let r = &self.rotation;
        let mut rt = [[0.0; 3]; 3];
        for (i, row) in rt.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = r[j][i];
            }
        }
        let t = self.translation;
        let translation = [
            -(rt[0][0] * t[0] + rt[0][1] * t[1] + rt[0][2] * t[2]),
            -(rt[1][0] * t[0] + rt[1][1] * t[1] + rt[1][2] * t[2]),
            -(rt[2][0] * t[0] + rt[2][1] * t[1] + rt[2][2] * t[2]),
        ];
        RigidTransform {
            rotation: rt,
            translation,
        }
    }
}

const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Apply `t` to every point. Intensity and order are untouched; the identity
/// transform returns an exact copy (including signed zeros).
pub fn transform(cloud: &PointCloud, t: &RigidTransform) -> Result<PointCloud> {
    // Re-validate: a transform may have been built field-by-field elsewhere.
    let t = RigidTransform::new(t.rotation, t.translation)?;
    if t.is_identity() {
        return Ok(cloud.clone());
    }
    Ok(PointCloud {
        xyz: cloud.xyz.iter().map(|&p| t.apply(p)).collect(),
        intensity: cloud.intensity.clone(),
        frame_id: cloud.frame_id.clone(),
    })
}

/// Number of points kept by [`subsample`]: `round(keep_fraction · count)`,
/// halves rounded away from zero.
pub fn subsample_count(count: usize, keep_fraction: f64) -> usize {
    ((keep_fraction * count as f64).round() as usize).min(count)
}

/// Keep `round(keep_fraction · count)` points chosen uniformly without
/// replacement, in their original relative order.
///
/// The selection is `rand::seq::index::sample` driven by
/// [`rng::seeded(seed)`](crate::rng::seeded), so identical inputs always give
/// identical output.
pub fn subsample(cloud: &PointCloud, keep_fraction: f64, seed: u64) -> Result<PointCloud> {
    Ok(cloud.select(&subsample_indices(cloud.len(), keep_fraction, seed)?))
}

/// Ascending indices selected by [`subsample`].
pub fn subsample_indices(count: usize, keep_fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "keep_fraction must lie in (0, 1], got {keep_fraction}"
        )));
    }
    let keep = subsample_count(count, keep_fraction);
    if keep == count {
        return Ok((0..count).collect());
    }
    let mut rng = rng::seeded(seed);
    let mut picked = index::sample(&mut rng, count, keep).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cloud4(pts: &[[f64; 4]]) -> PointCloud {
        PointCloud::new(
            pts.iter().map(|p| [p[0], p[1], p[2]]).collect(),
            Some(pts.iter().map(|p| p[3]).collect()),
            "test",
        )
        .unwrap()
    }

    #[test]
    fn rejects_mixed_intensity_and_nan() {
        assert!(PointCloud::new(vec![[0.0; 3]; 2], Some(vec![0.1]), "f").is_err());
        assert!(PointCloud::new(vec![[f64::NAN, 0.0, 0.0]], None, "f").is_err());
        assert!(PointCloud::new(vec![[0.0; 3]], Some(vec![f64::INFINITY]), "f").is_err());
    }

    #[test]
    fn identity_is_bit_exact() {
        let c = cloud4(&[[-0.0, 1.5, 3.25, 0.5], [1e-30, -7.0, 0.1, 0.0]]);
        let out = transform(&c, &RigidTransform::identity()).unwrap();
        let bits = |c: &PointCloud| -> Vec<u64> {
            c.xyz().iter().flatten().map(|v| v.to_bits()).collect()
        };
        assert_eq!(bits(&out), bits(&c));
        assert_eq!(out.intensity(), c.intensity());
    }

    #[test]
    fn translation_and_rotation_examples() {
        let c = PointCloud::from_xyz(vec![[0.0, 0.0, 0.0]]);
        let out = transform(&c, &RigidTransform::from_translation([0.0, 0.0, 1.6])).unwrap();
        assert_eq!(out.xyz()[0], [0.0, 0.0, 1.6]);

        let c = PointCloud::from_xyz(vec![[1.0, 0.0, 0.0]]);
        let rz = RigidTransform::from_axis_angle([0.0, 0.0, 1.0], std::f64::consts::FRAC_PI_2, [0.0; 3])
            .unwrap();
        let p = transform(&c, &rz).unwrap().xyz()[0];
        for (got, want) in p.iter().zip([0.0, 1.0, 0.0]) {
            assert!((got - want).abs() <= 1e-12, "{p:?}");
        }
    }

    #[test]
    fn invalid_rotations_are_rejected() {
        let scaled = [[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(
            RigidTransform::new(scaled, [0.0; 3]),
            Err(Error::InvalidTransform(_))
        ));
        let reflection = [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(
            RigidTransform::new(reflection, [0.0; 3]),
            Err(Error::InvalidTransform(_))
        ));
    }

    #[test]
    fn subsample_examples() {
        let c = PointCloud::from_xyz((0..10).map(|k| [k as f64, 0.0, 0.0]).collect());
        assert_eq!(subsample(&c, 1.0, 3).unwrap(), c);
        let half = subsample(&c, 0.5, 3).unwrap();
        assert_eq!(half.len(), 5);
        let xs: Vec<f64> = half.xyz().iter().map(|p| p[0]).collect();
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(subsample(&c, 0.5, 3).unwrap(), half);
        for bad in [0.0, -0.1, 1.01, f64::NAN] {
            assert!(matches!(subsample(&c, bad, 0), Err(Error::InvalidArgument(_))));
        }
    }

    fn arb_axis() -> impl Strategy<Value = [f64; 3]> {
        prop::array::uniform3(-1.0f64..1.0).prop_filter("non-zero", |a| {
            a.iter().map(|v| v * v).sum::<f64>() > 1e-3
        })
    }

    proptest! {
        #[test]
        fn transform_round_trips(
            pts in prop::collection::vec(prop::array::uniform3(-80.0f64..80.0), 0..40),
            axis in arb_axis(),
            angle in -3.2f64..3.2,
            t in prop::array::uniform3(-50.0f64..50.0),
        ) {
            let c = PointCloud::from_xyz(pts);
            let tf = RigidTransform::from_axis_angle(axis, angle, t).unwrap();
            let back = transform(&transform(&c, &tf).unwrap(), &tf.inverse()).unwrap();
            for (a, b) in c.xyz().iter().zip(back.xyz()) {
                for k in 0..3 {
                    prop_assert!((a[k] - b[k]).abs() <= 1e-9);
                }
            }
        }

        #[test]
        fn subsample_is_ordered_subset_and_deterministic(
            n in 0usize..300,
            frac in 0.001f64..=1.0,
            seed in any::<u64>(),
        ) {
            let c = PointCloud::from_xyz((0..n).map(|k| [k as f64, 0.0, 0.0]).collect());
            let a = subsample(&c, frac, seed).unwrap();
            let b = subsample(&c, frac, seed).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.len(), subsample_count(n, frac));
            let xs: Vec<f64> = a.xyz().iter().map(|p| p[0]).collect();
            prop_assert!(xs.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
