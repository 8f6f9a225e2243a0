//! Synthetic datasets on disk.
//!
//! A dataset directory holds, per scene `k`, `scene_{k:04}.bin` (KITTI-style
//! cloud) and `scene_{k:04}.labels.csv` (`point_index,object_id,class`,
//! class `ground` for id −1), plus `manifest.json` listing the scenes with the
//! spec hash, domain and seeds.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::domain::{apply_domain, DomainSpec};
use super::scene::{generate_scene, LabeledCloud, ObjectClass, SceneSpec, GROUND_ID};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::{io, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    /// SHA-256 over the JSON of the scene spec and domain.
    pub spec_hash: String,
    pub scene_spec: SceneSpec,
    pub domain: DomainSpec,
    pub scenes: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub cloud: String,
    pub labels: String,
    pub scene_seed: u64,
    pub points: usize,
    pub objects: usize,
}

pub fn spec_hash(spec: &SceneSpec, dom: &DomainSpec) -> String {
    let json = serde_json::to_string(&(spec, dom)).expect("serializable spec");
    hex(&Sha256::digest(json.as_bytes()))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Scene `k` of a dataset seeded with `seed`: generated from sub-stream
/// `2k` and moved into `dom` with sub-stream `2k + 1`.
pub fn dataset_scene(spec: &SceneSpec, dom: &DomainSpec, seed: u64, k: usize) -> Result<LabeledCloud> {
    let base = generate_scene(spec, rng::derive(seed, 2 * k as u64))?;
    apply_domain(&base, dom, rng::derive(seed, 2 * k as u64 + 1))
}

/// Generate `count` scenes and write them with a manifest into `dir`.
pub fn write_dataset(dir: &Path, spec: &SceneSpec, dom: &DomainSpec, seed: u64, count: usize) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut scenes = Vec::with_capacity(count);
    for k in 0..count {
        let lc = dataset_scene(spec, dom, seed, k)?;
        let cloud = format!("scene_{k:04}.bin");
        let labels = format!("scene_{k:04}.labels.csv");
        io::write_kitti_bin(&lc.cloud, dir.join(&cloud))?;
        write_labels(&lc, &dir.join(&labels))?;
        scenes.push(ManifestEntry {
            cloud,
            labels,
            scene_seed: rng::derive(seed, 2 * k as u64),
            points: lc.cloud.len(),
            objects: lc.objects.len(),
        });
    }
    let manifest = Manifest {
        seed,
        spec_hash: spec_hash(spec, dom),
        scene_spec: spec.clone(),
        domain: *dom,
        scenes,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("serializable manifest");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn write_labels(lc: &LabeledCloud, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "point_index,object_id,class").expect("write to Vec");
    for (k, &id) in lc.object_ids.iter().enumerate() {
        let class = lc.class_of(id).map_or("ground", ObjectClass::name);
        writeln!(out, "{k},{id},{class}").expect("write to Vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Per-point `(object_id, class)` from a label sidecar; class is `None` for ground.
pub fn read_labels(path: &Path) -> Result<Vec<(i32, Option<ObjectClass>)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        let bad = || Error::malformed(path, format!("bad label line {line:?}"), Some(lineno + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 || f[0].parse::<usize>().ok() != Some(rows.len()) {
            return Err(bad());
        }
        let id: i32 = f[1].parse().map_err(|_| bad())?;
        let class = match f[2] {
            "ground" if id == GROUND_ID => None,
            name => Some(ObjectClass::from_name(name).filter(|_| id >= 0).ok_or_else(bad)?),
        };
        rows.push((id, class));
    }
    Ok(rows)
}

/// Cloud and labels of scene `k` in a dataset directory.
pub fn load_scene(dir: &Path, entry: &ManifestEntry) -> Result<(PointCloud, Vec<(i32, Option<ObjectClass>)>)> {
    let cloud = io::load_kitti_bin(dir.join(&entry.cloud))?;
    let labels = read_labels(&dir.join(&entry.labels))?;
    if labels.len() != cloud.len() {
        return Err(Error::malformed(
            dir.join(&entry.labels),
            format!("{} labels for {} points", labels.len(), cloud.len()),
            None,
        ));
    }
    Ok((cloud, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_round_trip_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SceneSpec {
            placement: [-10.0, -10.0, 10.0, 10.0],
            ..SceneSpec::default()
        };
        let dom = DomainSpec::preset("shifted-origin").unwrap();
        let m = write_dataset(dir.path(), &spec, &dom, 42, 2).unwrap();
        assert_eq!(m.scenes.len(), 2);
        let text: Manifest = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(text, m);

        let (cloud, labels) = load_scene(dir.path(), &m.scenes[1]).unwrap();
        let lc = dataset_scene(&spec, &dom, 42, 1).unwrap();
        assert_eq!(cloud.len(), lc.cloud.len());
        for ((id, class), &want) in labels.iter().zip(&lc.object_ids) {
            assert_eq!(*id, want);
            assert_eq!(*class, lc.class_of(want));
        }
        let first = fs::read(dir.path().join("scene_0000.bin")).unwrap();
        let again = tempfile::tempdir().unwrap();
        write_dataset(again.path(), &spec, &dom, 42, 1).unwrap();
        assert_eq!(fs::read(again.path().join("scene_0000.bin")).unwrap(), first);
        assert_ne!(spec_hash(&spec, &dom), spec_hash(&spec, &DomainSpec::IDENTITY));
    }
}
