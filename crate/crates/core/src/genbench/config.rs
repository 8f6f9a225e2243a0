//! Flat TOML experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::classifier::Hyper;
use super::pool::Pooling;
use crate::descriptors::{parse_d_mode, DMode, EncoderSpec};
use crate::error::{Error, Result};
use crate::synthetic::{hex, DomainSpec, SceneSpec, SizeRange};
use crate::voxel::GridSpec;

/// Every knob of an experiment. Unknown keys are rejected; missing keys take
/// the values of [`ExperimentConfig::default`].
///
/// ```
/// let cfg = gblobs::genbench::ExperimentConfig::from_toml_str(
///     "id = \"demo\"\nseeds = [1, 2]\ntest_domains = [\"shifted-origin\"]",
/// ).unwrap();
/// assert_eq!(cfg.seeds, vec![1, 2]);
/// assert_eq!(cfg.feature_sets.len(), 5);
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub id: String,
    pub seeds: Vec<u64>,
    pub train_scenes: usize,
    pub test_scenes: usize,

    pub cars: usize,
    pub pedestrians: usize,
    pub cyclists: usize,
    /// `[min_l, min_w, min_h, max_l, max_w, max_h]`.
    pub car_size: [f64; 6],
    pub pedestrian_size: [f64; 6],
    pub cyclist_size: [f64; 6],
    pub placement: [f64; 4],
    pub points_per_m2: f64,
    pub surface_noise: f64,
    pub ground: bool,
    pub ground_z: f64,
    pub ground_points_per_m2: f64,
    pub min_gap: f64,

    pub range: [f64; 6],
    pub voxel: [f64; 3],
    pub max_points: usize,

    /// Encoder strings, e.g. `global+sigma`.
    pub feature_sets: Vec<String>,
    /// `literal`, `padded`, `padded:K` or `voxel_center`.
    pub d_mode: String,
    /// `mean`, `max`, `mean+max` or `mean+max+min`.
    pub pooling: String,
    pub train_domain: String,
    pub test_domains: Vec<String>,
    /// Shift the grid with each test domain's `z_offset`.
    pub realign_grid: bool,

    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,

    /// Test-time keep fractions of the sparsity sweep.
    pub keep_fractions: Vec<f64>,
    /// Cubic voxel edges of the voxel-size sweep.
    pub voxel_sizes: Vec<f64>,
    /// Encoders compared by both sweeps.
    pub sweep_feature_sets: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let scene = SceneSpec::default();
        let flat = |r: &SizeRange| [r.min[0], r.min[1], r.min[2], r.max[0], r.max[1], r.max[2]];
        ExperimentConfig {
            id: "experiment".into(),
            seeds: vec![0, 1, 2, 3, 4],
            train_scenes: 300,
            test_scenes: 100,
            cars: scene.cars,
            pedestrians: scene.pedestrians,
            cyclists: scene.cyclists,
            car_size: flat(&scene.car_size),
            pedestrian_size: flat(&scene.pedestrian_size),
            cyclist_size: flat(&scene.cyclist_size),
            placement: scene.placement,
            points_per_m2: 200.0,
            surface_noise: scene.surface_noise,
            ground: scene.ground,
            ground_z: scene.ground_z,
            ground_points_per_m2: scene.ground_points_per_m2,
            min_gap: scene.min_gap,
            range: [-75.2, -75.2, -2.0, 75.2, 75.2, 4.0],
            voxel: [0.1, 0.1, 0.15],
            max_points: 5,
            feature_sets: ["global", "global+sigma", "d", "sigma", "gblobs"].map(String::from).to_vec(),
            d_mode: "padded".into(),
            pooling: "mean+max+min".into(),
            train_domain: "identity".into(),
            test_domains: vec!["shifted-origin".into()],
            realign_grid: false,
            lr: 4.0,
            epochs: 2000,
            l2: 1e-4,
            keep_fractions: vec![1.0, 0.75, 0.5, 0.25, 0.1],
            voxel_sizes: vec![0.1, 0.2, 0.4],
            sweep_feature_sets: vec!["global".into(), "gblobs".into()],
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 over the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.train_scenes == 0 || self.test_scenes == 0 {
            return Err(Error::Config("train_scenes and test_scenes must be positive".into()));
        }
        if !(self.lr > 0.0) || !(self.l2 >= 0.0) || self.epochs == 0 {
            return Err(Error::Config("lr and epochs must be positive, l2 non-negative".into()));
        }
        self.scene_spec()?;
        self.grid()?;
        self.encoders(&self.feature_sets)?;
        self.encoders(&self.sweep_feature_sets)?;
        self.pooling()?;
        self.train_domain()?;
        self.test_domains()?;
        if self.keep_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(Error::Config("keep_fractions must lie in (0, 1]".into()));
        }
        for &s in &self.voxel_sizes {
            self.grid_with_voxel(s)?;
        }
        Ok(())
    }

    pub fn scene_spec(&self) -> Result<SceneSpec> {
        let range = |a: [f64; 6]| SizeRange {
            min: [a[0], a[1], a[2]],
            max: [a[3], a[4], a[5]],
        };
        let spec = SceneSpec {
            cars: self.cars,
            pedestrians: self.pedestrians,
            cyclists: self.cyclists,
            car_size: range(self.car_size),
            pedestrian_size: range(self.pedestrian_size),
            cyclist_size: range(self.cyclist_size),
            placement: self.placement,
            world: self.range,
            ground: self.ground,
            ground_z: self.ground_z,
            ground_points_per_m2: self.ground_points_per_m2,
            points_per_m2: self.points_per_m2,
            surface_noise: self.surface_noise,
            min_gap: self.min_gap,
            ..SceneSpec::default()
        };
        spec.validate().map_err(Error::into_config)?;
        Ok(spec)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::from_range(self.range, self.voxel, self.max_points).map_err(Error::into_config)
    }

    pub fn grid_with_voxel(&self, edge: f64) -> Result<GridSpec> {
        GridSpec::from_range(self.range, [edge; 3], self.max_points).map_err(Error::into_config)
    }

    pub fn d_mode(&self) -> Result<(DMode, Option<usize>)> {
        parse_d_mode(&self.d_mode).map_err(Error::into_config)
    }

    /// Parsed encoders with the configured `d_mode` applied unless the
    /// string sets its own.
    pub fn encoders(&self, names: &[String]) -> Result<Vec<EncoderSpec>> {
        if names.is_empty() {
            return Err(Error::Config("feature set list is empty".into()));
        }
        let (mode, cap) = self.d_mode()?;
        names
            .iter()
            .map(|s| {
                let mut e: EncoderSpec = s.parse().map_err(Error::into_config)?;
                if !s.contains("d_mode=") {
                    e.d_mode = mode;
                    e.capacity = cap;
                }
                Ok(e)
            })
            .collect()
    }

    pub fn pooling(&self) -> Result<Pooling> {
        self.pooling.parse().map_err(Error::into_config)
    }

    pub fn train_domain(&self) -> Result<DomainSpec> {
        self.train_domain.parse().map_err(Error::into_config)
    }

    pub fn test_domains(&self) -> Result<Vec<(String, DomainSpec)>> {
        self.test_domains
            .iter()
            .map(|s| Ok((s.clone(), s.parse().map_err(Error::into_config)?)))
            .collect()
    }

    pub fn hyper(&self, seed: u64) -> Hyper {
        Hyper {
            lr: self.lr,
            epochs: self.epochs,
            l2: self.l2,
            seed,
        }
    }
}
