//! Per-neighborhood descriptors and their per-voxel encoders.

mod blob;
mod container;
mod eig;
mod encoder;
mod normal;

pub use blob::{gaussian_blob, neighborhood_cov, neighborhood_mean, rel_distance_descriptor, BlobAux, DMode, GBlob, RelDistance};
pub use container::{
    decode_feature_set, encode_feature_set, read_feature_set, write_feature_csv, write_feature_set, MAGIC, VERSION,
};
pub use eig::{eig_sym3, Mat3, SymEigen3};
pub use encoder::{encode_cloud, encode_voxels, parse_d_mode, EncoderSpec, Feature, FeatureSet};
pub use normal::{surface_normal_descriptor, SurfaceNormal, FALLBACK_NORMAL};
