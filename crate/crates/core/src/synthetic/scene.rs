//! Labeled primitive scenes.

use std::f64::consts::{PI, TAU};

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Object categories and their stand-in shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectClass {
    /// Cuboid, car-sized.
    Car,
    /// Upright cylinder; `size[0]` is the diameter, `size[1]` is ignored.
    Pedestrian,
    /// Thin box.
    Cyclist,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 3] = [ObjectClass::Car, ObjectClass::Pedestrian, ObjectClass::Cyclist];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectClass::Car => "car",
            ObjectClass::Pedestrian => "pedestrian",
            ObjectClass::Cyclist => "cyclist",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        ObjectClass::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Inclusive `(length, width, height)` bounds in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeRange {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl SizeRange {
    pub fn fixed(size: [f64; 3]) -> Self {
        SizeRange { min: size, max: size }
    }

    fn sample(&self, r: &mut Rng) -> [f64; 3] {
        std::array::from_fn(|a| {
            if self.max[a] > self.min[a] {
                r.random_range(self.min[a]..=self.max[a])
            } else {
                self.min[a]
            }
        })
    }
}

/// Scene recipe. Objects stand on the plane `z = ground_z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneSpec {
    pub cars: usize,
    pub pedestrians: usize,
    pub cyclists: usize,
    pub car_size: SizeRange,
    pub pedestrian_size: SizeRange,
    pub cyclist_size: SizeRange,
    /// `[xmin, ymin, xmax, ymax]` of object centers.
    pub placement: [f64; 4],
    /// `[xmin, ymin, zmin, xmax, ymax, zmax]` that every object must fit in.
    pub world: [f64; 6],
    pub ground: bool,
    pub ground_z: f64,
    pub ground_points_per_m2: f64,
    /// Surface sampling density on objects.
    pub points_per_m2: f64,
    /// Isotropic Gaussian noise added to object and ground points.
    pub surface_noise: f64,
    /// Free space kept between footprints.
    pub min_gap: f64,
    /// Placement attempts per object before giving up.
    pub max_attempts: usize,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            cars: 2,
            pedestrians: 2,
            cyclists: 2,
            car_size: SizeRange {
                min: [3.9, 1.6, 1.4],
                max: [5.0, 2.0, 1.7],
            },
            pedestrian_size: SizeRange {
                min: [0.5, 0.5, 1.5],
                max: [0.7, 0.7, 1.9],
            },
            cyclist_size: SizeRange {
                min: [1.6, 0.5, 1.5],
                max: [2.0, 0.7, 1.9],
            },
            placement: [-30.0, -30.0, 30.0, 30.0],
            world: [-75.2, -75.2, -2.0, 75.2, 75.2, 4.0],
            ground: true,
            ground_z: -1.6,
            ground_points_per_m2: 0.5,
            points_per_m2: 100.0,
            surface_noise: 0.01,
            min_gap: 0.5,
            max_attempts: 100,
        }
    }
}

impl SceneSpec {
    /// Parse a TOML scene recipe; missing keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: SceneSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate().map_err(Error::into_config)?;
        Ok(spec)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SceneSpec::from_toml_str(&text)
    }

    pub fn count(&self, class: ObjectClass) -> usize {
        match class {
            ObjectClass::Car => self.cars,
            ObjectClass::Pedestrian => self.pedestrians,
            ObjectClass::Cyclist => self.cyclists,
        }
    }

    pub fn size_range(&self, class: ObjectClass) -> &SizeRange {
        match class {
            ObjectClass::Car => &self.car_size,
            ObjectClass::Pedestrian => &self.pedestrian_size,
            ObjectClass::Cyclist => &self.cyclist_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::invalid(m));
        for class in ObjectClass::ALL {
            let r = self.size_range(class);
            if (0..3).any(|a| !(r.min[a] > 0.0) || !(r.max[a] >= r.min[a]) || !r.max[a].is_finite()) {
                return err(format!("{} size range must be positive and ordered", class.name()));
            }
        }
        let [px0, py0, px1, py1] = self.placement;
        let [wx0, wy0, wz0, wx1, wy1, wz1] = self.world;
        if !(px0 < px1 && py0 < py1) {
            return err("placement region is empty".into());
        }
        if !(wx0 <= px0 && wy0 <= py0 && px1 <= wx1 && py1 <= wy1) {
            return err("placement region must lie inside the world box".into());
        }
        let tallest = ObjectClass::ALL
            .iter()
            .map(|&c| self.size_range(c).max[2])
            .fold(0.0, f64::max);
        if !(self.ground_z >= wz0 && self.ground_z + tallest < wz1) {
            return err("objects standing on ground_z do not fit the world z range".into());
        }
        for (name, v) in [
            ("points_per_m2", self.points_per_m2),
            ("ground_points_per_m2", self.ground_points_per_m2),
            ("surface_noise", self.surface_noise),
            ("min_gap", self.min_gap),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return err(format!("{name} must be a non-negative number"));
            }
        }
        if self.max_attempts == 0 {
            return err("max_attempts must be positive".into());
        }
        Ok(())
    }
}

/// A placed object. `center` is the geometric center of the shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub class: ObjectClass,
    pub center: [f64; 3],
    pub size: [f64; 3],
    pub yaw: f64,
}

impl ObjectInstance {
    pub fn surface_area(&self) -> f64 {
        let [l, w, h] = self.size;
        match self.class {
            ObjectClass::Pedestrian => {
                let r = 0.5 * l;
                TAU * r * h + 2.0 * PI * r * r
            }
            _ => 2.0 * (l * w + l * h + w * h),
        }
    }

    fn footprint_radius(&self) -> f64 {
        let [l, w, _] = self.size;
        match self.class {
            ObjectClass::Pedestrian => 0.5 * l,
            _ => 0.5 * (l * l + w * w).sqrt(),
        }
    }

    /// One uniform sample on the surface, in the world frame.
    pub fn sample_surface(&self, r: &mut Rng) -> [f64; 3] {
        let [l, w, h] = self.size;
        let local = match self.class {
            ObjectClass::Pedestrian => {
                let rad = 0.5 * l;
                let side = TAU * rad * h;
                let cap = PI * rad * rad;
                let u = r.random_range(0.0..side + 2.0 * cap);
                if u < side {
                    let t = r.random_range(0.0..TAU);
                    [rad * t.cos(), rad * t.sin(), r.random_range(-0.5 * h..0.5 * h)]
                } else {
                    let z = if u < side + cap { -0.5 * h } else { 0.5 * h };
                    let rr = rad * r.random::<f64>().sqrt();
                    let t = r.random_range(0.0..TAU);
                    [rr * t.cos(), rr * t.sin(), z]
                }
            }
            _ => {
                let faces = [l * w, l * w, l * h, l * h, w * h, w * h];
                let total: f64 = faces.iter().sum();
                let mut u = r.random_range(0.0..total);
                let mut face = 5;
                for (k, a) in faces.iter().enumerate() {
                    if u < *a {
                        face = k;
                        break;
                    }
                    u -= a;
                }
                let sx = r.random_range(-0.5..0.5);
                let sy = r.random_range(-0.5..0.5);
                let sign = if face % 2 == 0 { -0.5 } else { 0.5 };
                match face / 2 {
                    0 => [sx * l, sy * w, sign * h],
                    1 => [sx * l, sign * w, sy * h],
                    _ => [sign * l, sx * w, sy * h],
                }
            }
        };
        self.to_world(local)
    }

    pub fn to_world(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        [
            self.center[0] + c * p[0] - s * p[1],
            self.center[1] + s * p[0] + c * p[1],
            self.center[2] + p[2],
        ]
    }

    pub fn to_local(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        let d = [p[0] - self.center[0], p[1] - self.center[1], p[2] - self.center[2]];
        [c * d[0] + s * d[1], -s * d[0] + c * d[1], d[2]]
    }

    /// Distance from `p` to the shape's surface.
    pub fn surface_distance(&self, p: [f64; 3]) -> f64 {
        let q = self.to_local(p);
        let [l, w, h] = self.size;
        match self.class {
            ObjectClass::Pedestrian => {
                let rad = 0.5 * l;
                let radial = (q[0] * q[0] + q[1] * q[1]).sqrt() - rad;
                let vertical = q[2].abs() - 0.5 * h;
                if radial <= 0.0 && vertical <= 0.0 {
                    -radial.max(vertical)
                } else {
                    (radial.max(0.0).powi(2) + vertical.max(0.0).powi(2)).sqrt()
                }
            }
            _ => {
                let e = [q[0].abs() - 0.5 * l, q[1].abs() - 0.5 * w, q[2].abs() - 0.5 * h];
                let inside = e.iter().all(|v| *v <= 0.0);
                if inside {
                    -e.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                } else {
                    e.iter().map(|v| v.max(0.0).powi(2)).sum::<f64>().sqrt()
                }
            }
        }
    }
}

/// Flat rectangle of ground returns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundPatch {
    /// `[xmin, ymin, xmax, ymax]`.
    pub rect: [f64; 4],
    pub z: f64,
}

impl GroundPatch {
    pub fn area(&self) -> f64 {
        (self.rect[2] - self.rect[0]) * (self.rect[3] - self.rect[1])
    }

    pub fn sample(&self, r: &mut Rng) -> [f64; 3] {
        [
            r.random_range(self.rect[0]..self.rect[2]),
            r.random_range(self.rect[1]..self.rect[3]),
            self.z,
        ]
    }
}

/// Object id of ground points.
pub const GROUND_ID: i32 = -1;

/// A cloud with per-point object ids and the geometry that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud {
    pub cloud: PointCloud,
    /// Per point: index into `objects`, or [`GROUND_ID`].
    pub object_ids: Vec<i32>,
    pub objects: Vec<ObjectInstance>,
    pub ground: Option<GroundPatch>,
    pub surface_noise: f64,
}

impl LabeledCloud {
    pub fn class_of(&self, object_id: i32) -> Option<ObjectClass> {
        usize::try_from(object_id).ok().and_then(|k| self.objects.get(k)).map(|o| o.class)
    }

    /// Objects per class, indexed by [`ObjectClass::index`].
    pub fn class_histogram(&self) -> [usize; 3] {
        let mut h = [0; 3];
        for o in &self.objects {
            h[o.class.index()] += 1;
        }
        h
    }

    /// Points per object id (ground excluded).
    pub fn points_per_object(&self) -> Vec<usize> {
        let mut n = vec![0; self.objects.len()];
        for &id in &self.object_ids {
            if id >= 0 {
                n[id as usize] += 1;
            }
        }
        n
    }
}

// Sub-stream indices of a scene seed.
pub(crate) const PLACEMENT_STREAM: u64 = 0;
pub(crate) const GROUND_STREAM: u64 = u64::MAX;
pub(crate) fn object_stream(k: usize) -> u64 {
    1 + k as u64
}

/// Draw `n` noisy surface points of `obj` from `r`.
pub(crate) fn sample_object(obj: &ObjectInstance, n: usize, noise: f64, r: &mut Rng) -> Vec<[f64; 3]> {
    (0..n)
        .map(|_| {
            let p = obj.sample_surface(r);
            jitter(p, noise, r)
        })
        .collect()
}

pub(crate) fn sample_ground(g: &GroundPatch, n: usize, noise: f64, r: &mut Rng) -> Vec<[f64; 3]> {
    (0..n)
        .map(|_| {
            let p = g.sample(r);
            jitter(p, noise, r)
        })
        .collect()
}

pub(crate) fn jitter(p: [f64; 3], sigma: f64, r: &mut Rng) -> [f64; 3] {
    if sigma == 0.0 {
        return p;
    }
    p.map(|v| v + sigma * r.sample::<f64, _>(StandardNormal))
}

/// Generate one scene.
///
/// Objects are placed in class order (cars, pedestrians, cyclists) with
/// uniform centers, sizes and yaw, rejecting footprints that come closer than
/// `min_gap`; each object gets `max_attempts` tries before the call fails
/// with [`Error::GenerationFailure`]. Object `k` then receives
/// `round(area · points_per_m2)` surface samples from its own stream, so
/// objects are sampled in parallel without affecting the output.
pub fn generate_scene(spec: &SceneSpec, seed: u64) -> Result<LabeledCloud> {
    spec.validate()?;
    let mut placer = rng::stream(seed, PLACEMENT_STREAM);
    let mut objects: Vec<ObjectInstance> = Vec::new();
    let [px0, py0, px1, py1] = spec.placement;
    let [wx0, wy0, _, wx1, wy1, _] = spec.world;
    for class in ObjectClass::ALL {
        for _ in 0..spec.count(class) {
            let mut placed = None;
            for _ in 0..spec.max_attempts {
                let size = spec.size_range(class).sample(&mut placer);
                let cx = placer.random_range(px0..=px1);
                let cy = placer.random_range(py0..=py1);
                let yaw = placer.random_range(0.0..PI);
                let obj = ObjectInstance {
                    class,
                    center: [cx, cy, spec.ground_z + 0.5 * size[2]],
                    size,
                    yaw,
                };
                let rad = obj.footprint_radius();
                let fits = cx - rad >= wx0 && cx + rad <= wx1 && cy - rad >= wy0 && cy + rad <= wy1;
                let clear = objects.iter().all(|o| {
                    let dx = o.center[0] - cx;
                    let dy = o.center[1] - cy;
                    (dx * dx + dy * dy).sqrt() >= o.footprint_radius() + rad + spec.min_gap
                });
                if fits && clear {
                    placed = Some(obj);
                    break;
                }
            }
            let obj = placed.ok_or_else(|| {
                Error::GenerationFailure(format!(
                    "could not place {} #{} after {} attempts",
                    class.name(),
                    objects.len(),
                    spec.max_attempts
                ))
            })?;
            objects.push(obj);
        }
    }

    let per_object: Vec<Vec<[f64; 3]>> = objects
        .par_iter()
        .enumerate()
        .map(|(k, obj)| {
            let n = (obj.surface_area() * spec.points_per_m2).round() as usize;
            sample_object(obj, n, spec.surface_noise, &mut rng::stream(seed, object_stream(k)))
        })
        .collect();

    let ground = spec.ground.then_some(GroundPatch {
        rect: spec.placement,
        z: spec.ground_z,
    });
    let ground_pts = match &ground {
        Some(g) => {
            let n = (g.area() * spec.ground_points_per_m2).round() as usize;
            sample_ground(g, n, spec.surface_noise, &mut rng::stream(seed, GROUND_STREAM))
        }
        None => Vec::new(),
    };

    let mut xyz = Vec::new();
    let mut ids = Vec::new();
    for (k, pts) in per_object.into_iter().enumerate() {
        ids.extend(std::iter::repeat_n(k as i32, pts.len()));
        xyz.extend(pts);
    }
    ids.extend(std::iter::repeat_n(GROUND_ID, ground_pts.len()));
    xyz.extend(ground_pts);

    Ok(LabeledCloud {
        cloud: PointCloud::new(xyz, None, format!("synthetic-{seed}"))?,
        object_ids: ids,
        objects,
        ground,
        surface_noise: spec.surface_noise,
    })
}
