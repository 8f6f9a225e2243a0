//! The chapters of the `book/` guide, compiled so that their code listings
//! run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/clouds.md")]
pub mod clouds {}

#[doc = include_str!("../../../book/src/voxels.md")]
pub mod voxels {}

#[doc = include_str!("../../../book/src/gaussian_blobs.md")]
pub mod gaussian_blobs {}

#[doc = include_str!("../../../book/src/baselines.md")]
pub mod baselines {}

#[doc = include_str!("../../../book/src/formats.md")]
pub mod formats {}

#[doc = include_str!("../../../book/src/synthetic.md")]
pub mod synthetic {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
