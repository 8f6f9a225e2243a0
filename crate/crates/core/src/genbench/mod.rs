//! Object-classification benchmarks on synthetic scenes.
//!
//! Voxel features are pooled per object ([`pool_object_features`]) and fed
//! to a softmax [`LinearClassifier`]. The runners train in one domain and
//! report accuracy in others, or sweep point sparsity and voxel size.

mod bench;
mod classifier;
mod config;
mod pool;
mod report;
mod runner;

pub use bench::{bench_cloud, run_bench, BenchResult};
pub use classifier::{evaluate, objective, Evaluation, Hyper, LinearClassifier, MIN_SCALE};
pub use config::ExperimentConfig;
pub use pool::{majority_object, pool_object_features, DesignMatrix, Pooling};
pub use report::{mean_std, Cell, Curve, ExperimentKind, Occupancy, Report, Timing, PROBE_NOTE};
pub use runner::{run_dg_experiment, run_sparsity_sweep, run_voxel_sweep, IN_DOMAIN};
