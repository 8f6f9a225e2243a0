//! Experiment reports: JSON plus CSV exports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Printed in every report so that numbers are not read as detector results.
pub const PROBE_NOTE: &str = "Accuracies come from a linear probe over pooled voxel features of synthetic \
objects; they are not 3D detection scores.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DomainGeneralization,
    Sparsity,
    VoxelSize,
}

/// One (domain, feature set, sweep value) result aggregated over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub domain: String,
    pub feature_set: String,
    /// Keep fraction or voxel edge for sweep cells.
    pub x: Option<f64>,
    /// Descriptor width declared by the encoder.
    pub width: usize,
    /// Row width seen by the classifier after pooling.
    pub probe_width: usize,
    pub mean: f64,
    /// Sample standard deviation over seeds, 0 for a single seed.
    pub std: f64,
    pub n_seeds: usize,
    pub per_seed: Vec<f64>,
    pub train_objects: usize,
    pub test_objects: usize,
    pub skipped_objects: usize,
    /// Occupied voxels per test scene, averaged over scenes and seeds.
    pub mean_voxels: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub feature_set: String,
    pub x_label: String,
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Points-per-voxel histogram of the test scenes at one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Occupancy {
    pub x: f64,
    pub histogram: BTreeMap<usize, usize>,
    pub fraction_at_most_2: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_secs: f64,
    pub per_seed_secs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: ExperimentKind,
    pub id: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub note: String,
    pub config: ExperimentConfig,
    pub cells: Vec<Cell>,
    pub curves: Vec<Curve>,
    pub occupancy: Vec<Occupancy>,
    /// One line per seed that did not finish.
    pub failures: Vec<String>,
    /// Kept out of `report.json` so that reruns compare byte for byte.
    #[serde(skip)]
    pub timing: Timing,
}

impl Report {
    pub fn new(kind: ExperimentKind, cfg: &ExperimentConfig) -> Self {
        Report {
            kind,
            id: cfg.id.clone(),
            config_hash: cfg.hash(),
            seeds: cfg.seeds.clone(),
            note: PROBE_NOTE.into(),
            config: cfg.clone(),
            cells: Vec::new(),
            curves: Vec::new(),
            occupancy: Vec::new(),
            failures: Vec::new(),
            timing: Timing::default(),
        }
    }

    pub fn cell(&self, domain: &str, feature_set: &str, x: Option<f64>) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.domain == domain && c.feature_set == feature_set && c.x == x)
    }

    pub fn curve(&self, feature_set: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.feature_set == feature_set)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn cells_csv(&self) -> String {
        let mut s = String::from("domain,feature_set,x,width,probe_width,mean,std,n_seeds,train_objects,test_objects,skipped_objects,mean_voxels\n");
        for c in &self.cells {
            let x = c.x.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                s,
                "{},{},{x},{},{},{},{},{},{},{},{},{}",
                c.domain, c.feature_set, c.width, c.probe_width, c.mean, c.std, c.n_seeds, c.train_objects, c.test_objects, c.skipped_objects, c.mean_voxels
            )
            .expect("write to String");
        }
        s
    }

    pub fn curves_csv(&self) -> String {
        let mut s = String::from("feature_set,x_label,x,mean,std\n");
        for c in &self.curves {
            for k in 0..c.x.len() {
                writeln!(s, "{},{},{},{},{}", c.feature_set, c.x_label, c.x[k], c.mean[k], c.std[k]).expect("write to String");
            }
        }
        s
    }

    pub fn occupancy_csv(&self) -> String {
        let mut s = String::from("x,occupancy,count\n");
        for o in &self.occupancy {
            for (n, count) in &o.histogram {
                writeln!(s, "{},{n},{count}", o.x).expect("write to String");
            }
        }
        s
    }

    /// Write `report.json`, `cells.csv`, `timing.json` and, when present,
    /// `curves.csv` and `occupancy.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, body: String| {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))
        };
        put("report.json", self.to_json())?;
        put("cells.csv", self.cells_csv())?;
        put("timing.json", serde_json::to_string_pretty(&self.timing).expect("timing serializes"))?;
        if !self.curves.is_empty() {
            put("curves.csv", self.curves_csv())?;
        }
        if !self.occupancy.is_empty() {
            put("occupancy.csv", self.occupancy_csv())?;
        }
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let p = dir.join("report.json");
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        serde_json::from_str(&text).map_err(|e| Error::malformed(&p, e.to_string(), None))
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
