//! Local-geometry feature extraction for LiDAR point clouds.
//!
//! The crate summarizes each voxel neighborhood of a cloud as a Gaussian
//! blob, a local-frame mean `d` plus the population covariance `Σ` of the
//! member points, and offers the usual baselines next to it: the voxel mean
//! in sensor coordinates, centroid-relative distances and PCA surface
//! normals. Because `Σ` and `d` do not depend on where a neighborhood sits in
//! the sensor frame, models built on them are insensitive to shifts of the
//! sensor origin that break coordinate-based inputs.
//!
//! The [`synthetic`] and [`genbench`] modules provide a small, seeded
//! stand-in for cross-dataset experiments: labeled primitive scenes,
//! domain-shift operators and a linear probe that measures how well each
//! feature set transfers.
//!
//! ```
//! use gblobs::{cloud::PointCloud, descriptors::{encode_cloud, EncoderSpec}, voxel::GridSpec};
//!
//! let cloud = PointCloud::from_xyz(vec![[0.02, 0.01, 0.0], [0.07, 0.03, 0.1], [0.05, 0.08, 0.05]]);
//! let grid = GridSpec::waymo(5);
//! let features = encode_cloud(&cloud, &grid, &EncoderSpec::gblobs())?;
//! assert_eq!(features.width(), 12);
//! # Ok::<(), gblobs::Error>(())
//! ```

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cloud;
pub mod descriptors;
mod error;
pub mod genbench;
pub mod io;
pub mod rng;
pub mod synthetic;
pub mod voxel;

pub use error::{Error, Result};
