//! Seeded synthetic scenes and domain shifts.
//!
//! Scenes hold three object classes rendered as primitive surfaces (cuboid,
//! upright cylinder, thin box) over an optional ground patch. Points are
//! sampled uniformly over each surface, so point counts follow surface
//! area; there is no ray casting or occlusion. [`apply_domain`] then moves a
//! scene into a target domain by changing its density, noise, sensor height
//! and sparsity.

mod dataset;
mod domain;
mod scene;

pub use dataset::{dataset_scene, load_scene, read_labels, spec_hash, write_dataset, write_labels, Manifest, ManifestEntry};
pub(crate) use dataset::hex;
pub use domain::{apply_domain, DomainSpec};
pub use scene::{generate_scene, GroundPatch, LabeledCloud, ObjectClass, ObjectInstance, SceneSpec, SizeRange, GROUND_ID};
