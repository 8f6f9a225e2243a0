//! Seeded experiment runners.
//!
//! Every seed `s` draws training scenes from `derive(s, 0)` and test scenes
//! from `derive(s, 1)`. Test scenes are generated once and then moved into
//! each test domain with the same domain seed, so two domains that differ
//! only in `z_offset` see the same points up to a translation.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use super::classifier::{evaluate, LinearClassifier};
use super::config::ExperimentConfig;
use super::pool::{pool_object_features, DesignMatrix, Pooling};
use super::report::{mean_std, Cell, Curve, ExperimentKind, Occupancy, Report};
use crate::descriptors::{encode_voxels, EncoderSpec};
use crate::error::Result;
use crate::rng;
use crate::synthetic::{apply_domain, generate_scene, DomainSpec, SceneSpec};
use crate::voxel::{fraction_at_most, occupancy_histogram, voxelize, GridSpec};

/// Label of the test domain equal to the training domain.
pub const IN_DOMAIN: &str = "in-domain";

#[derive(Debug, Clone)]
struct Arm {
    domain: DomainSpec,
    grid: GridSpec,
}

struct TestArm {
    label: String,
    x: Option<f64>,
    arm: Arm,
    train: usize,
}

struct Plan {
    kind: ExperimentKind,
    train: Vec<Arm>,
    test: Vec<TestArm>,
    names: Vec<String>,
    encoders: Vec<EncoderSpec>,
    pooling: Pooling,
    x_label: Option<&'static str>,
}

impl Plan {
    fn probe_width(&self, enc: &EncoderSpec) -> usize {
        self.pooling.width(enc.width())
    }
}

#[derive(Default)]
struct ArmData {
    rows: Vec<DesignMatrix>,
    hist: BTreeMap<usize, usize>,
    voxels: usize,
}

fn collect(spec: &SceneSpec, seed: u64, scenes: usize, arms: &[Arm], plan: &Plan) -> Result<Vec<ArmData>> {
    let per_scene: Vec<Vec<ArmData>> = (0..scenes)
        .into_par_iter()
        .map(|k| {
            let base = generate_scene(spec, rng::derive(seed, 2 * k as u64))?;
            arms.iter()
                .map(|arm| {
                    let lc = apply_domain(&base, &arm.domain, rng::derive(seed, 2 * k as u64 + 1))?;
                    let vs = voxelize(&lc.cloud, &arm.grid);
                    let rows = plan
                        .encoders
                        .iter()
                        .map(|enc| {
                            let fs = encode_voxels(&lc.cloud, &vs, enc)?;
                            pool_object_features(&fs, &vs, &lc, plan.pooling)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(ArmData {
                        rows,
                        hist: occupancy_histogram(&vs),
                        voxels: vs.len(),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut out: Vec<ArmData> = arms
        .iter()
        .map(|_| ArmData {
            rows: plan
                .encoders
                .iter()
                .map(|e| DesignMatrix::empty(plan.probe_width(e), e.label()))
                .collect(),
            ..ArmData::default()
        })
        .collect();
    for scene in per_scene {
        for (acc, d) in out.iter_mut().zip(scene) {
            for (m, r) in acc.rows.iter_mut().zip(&d.rows) {
                m.append(r)?;
            }
            for (n, c) in d.hist {
                *acc.hist.entry(n).or_insert(0) += c;
            }
            acc.voxels += d.voxels;
        }
    }
    Ok(out)
}

struct SeedResult {
    accuracy: Vec<f64>,
    train_objects: Vec<usize>,
    test_objects: Vec<usize>,
    skipped: Vec<usize>,
    voxels: Vec<usize>,
    hists: Vec<BTreeMap<usize, usize>>,
}

fn run_seed(cfg: &ExperimentConfig, spec: &SceneSpec, plan: &Plan, seed: u64) -> Result<SeedResult> {
    let train = collect(spec, rng::derive(seed, 0), cfg.train_scenes, &plan.train, plan)?;
    let test_arms: Vec<Arm> = plan.test.iter().map(|t| t.arm.clone()).collect();
    let test = collect(spec, rng::derive(seed, 1), cfg.test_scenes, &test_arms, plan)?;

    let hyper = cfg.hyper(rng::derive(seed, 2));
    let models = train
        .iter()
        .map(|arm| arm.rows.iter().map(|dm| LinearClassifier::train(dm, &hyper)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;

    let mut r = SeedResult {
        accuracy: Vec::new(),
        train_objects: Vec::new(),
        test_objects: Vec::new(),
        skipped: Vec::new(),
        voxels: Vec::new(),
        hists: Vec::new(),
    };
    for (t, data) in plan.test.iter().zip(&test) {
        for (e, dm) in data.rows.iter().enumerate() {
            let eval = evaluate(&models[t.train][e], dm)?;
            r.accuracy.push(eval.accuracy);
            r.train_objects.push(train[t.train].rows[e].len());
            r.test_objects.push(dm.len());
            r.skipped.push(dm.skipped_objects);
        }
        r.voxels.push(data.voxels);
        r.hists.push(data.hist.clone());
    }
    Ok(r)
}

fn run_plan(cfg: &ExperimentConfig, plan: Plan) -> Result<Report> {
    let spec = cfg.scene_spec()?;
    let start = Instant::now();
    let mut report = Report::new(plan.kind, cfg);
    let mut done = Vec::new();
    for &seed in &cfg.seeds {
        let t0 = Instant::now();
        match run_seed(cfg, &spec, &plan, seed) {
            Ok(r) => done.push(r),
            Err(e) => report.failures.push(format!("seed {seed}: {e}")),
        }
        report.timing.per_seed_secs.push(t0.elapsed().as_secs_f64());
    }

    let n_enc = plan.encoders.len();
    if !done.is_empty() {
        for (ti, t) in plan.test.iter().enumerate() {
            for (e, name) in plan.names.iter().enumerate() {
                let k = ti * n_enc + e;
                let per_seed: Vec<f64> = done.iter().map(|r| r.accuracy[k]).collect();
                let (mean, std) = mean_std(&per_seed);
                let voxels: usize = done.iter().map(|r| r.voxels[ti]).sum();
                report.cells.push(Cell {
                    domain: t.label.clone(),
                    feature_set: name.clone(),
                    x: t.x,
                    width: plan.encoders[e].width(),
                    probe_width: plan.probe_width(&plan.encoders[e]),
                    mean,
                    std,
                    n_seeds: per_seed.len(),
                    per_seed,
                    train_objects: done.iter().map(|r| r.train_objects[k]).sum(),
                    test_objects: done.iter().map(|r| r.test_objects[k]).sum(),
                    skipped_objects: done.iter().map(|r| r.skipped[k]).sum(),
                    mean_voxels: voxels as f64 / (done.len() * cfg.test_scenes) as f64,
                });
            }
            if let Some(x) = t.x {
                let mut histogram = BTreeMap::new();
                for r in &done {
                    for (n, c) in &r.hists[ti] {
                        *histogram.entry(*n).or_insert(0) += c;
                    }
                }
                report.occupancy.push(Occupancy {
                    x,
                    fraction_at_most_2: fraction_at_most(&histogram, 2),
                    histogram,
                });
            }
        }
        if let Some(x_label) = plan.x_label {
            for name in &plan.names {
                let cells: Vec<&Cell> = report.cells.iter().filter(|c| &c.feature_set == name).collect();
                report.curves.push(Curve {
                    feature_set: name.clone(),
                    x_label: x_label.into(),
                    x: cells.iter().filter_map(|c| c.x).collect(),
                    mean: cells.iter().map(|c| c.mean).collect(),
                    std: cells.iter().map(|c| c.std).collect(),
                });
            }
        }
    }
    report.timing.total_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

fn grid_for(cfg: &ExperimentConfig, base: &GridSpec, dom: &DomainSpec) -> Result<GridSpec> {
    if cfg.realign_grid && dom.z_offset != 0.0 {
        base.shifted([0.0, 0.0, dom.z_offset])
    } else {
        Ok(*base)
    }
}

/// Train in `train_domain`, test in-domain and in every `test_domains` entry,
/// for each of `feature_sets`.
///
/// Seeds that fail are listed in [`Report::failures`]; the remaining seeds
/// still produce cells. Only configuration errors are returned as `Err`.
pub fn run_dg_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let train_dom = cfg.train_domain()?;
    let mut test = vec![TestArm {
        label: IN_DOMAIN.into(),
        x: None,
        arm: Arm {
            domain: train_dom,
            grid: grid_for(cfg, &grid, &train_dom)?,
        },
        train: 0,
    }];
    for (label, dom) in cfg.test_domains()? {
        test.push(TestArm {
            label,
            x: None,
            arm: Arm {
                domain: dom,
                grid: grid_for(cfg, &grid, &dom)?,
            },
            train: 0,
        });
    }
    run_plan(
        cfg,
        Plan {
            kind: ExperimentKind::DomainGeneralization,
            train: vec![Arm { domain: train_dom, grid }],
            test,
            names: cfg.feature_sets.clone(),
            encoders: cfg.encoders(&cfg.feature_sets)?,
            pooling: cfg.pooling()?,
            x_label: None,
        },
    )
}

/// Train at full density in `train_domain`; test at every `keep_fractions`
/// entry. Reports accuracy curves and occupancy histograms per fraction.
pub fn run_sparsity_sweep(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let train_dom = cfg.train_domain()?;
    let test = cfg
        .keep_fractions
        .iter()
        .map(|&f| TestArm {
            label: format!("keep={f}"),
            x: Some(f),
            arm: Arm {
                domain: DomainSpec {
                    keep_fraction: train_dom.keep_fraction * f,
                    ..train_dom
                },
                grid,
            },
            train: 0,
        })
        .collect();
    run_plan(
        cfg,
        Plan {
            kind: ExperimentKind::Sparsity,
            train: vec![Arm { domain: train_dom, grid }],
            test,
            names: cfg.sweep_feature_sets.clone(),
            encoders: cfg.encoders(&cfg.sweep_feature_sets)?,
            pooling: cfg.pooling()?,
            x_label: Some("keep_fraction"),
        },
    )
}

/// Train and test in `train_domain` with cubic voxels of every
/// `voxel_sizes` edge.
pub fn run_voxel_sweep(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let train_dom = cfg.train_domain()?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, &edge) in cfg.voxel_sizes.iter().enumerate() {
        let arm = Arm {
            domain: train_dom,
            grid: cfg.grid_with_voxel(edge)?,
        };
        train.push(arm.clone());
        test.push(TestArm {
            label: format!("voxel={edge}"),
            x: Some(edge),
            arm,
            train: i,
        });
    }
    run_plan(
        cfg,
        Plan {
            kind: ExperimentKind::VoxelSize,
            train,
            test,
            names: cfg.sweep_feature_sets.clone(),
            encoders: cfg.encoders(&cfg.sweep_feature_sets)?,
            pooling: cfg.pooling()?,
            x_label: Some("voxel_size"),
        },
    )
}
