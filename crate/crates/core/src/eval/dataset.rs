//! On-disk datasets: one directory per subject holding `scene.mhd` and one
//! `<label>.mhd` mask per object, plus a `dataset.json` index.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::phantom::{generate_phantom, PhantomSpec};
use crate::error::{Error, Result};
use crate::metaimage::{load_mask, load_volume, save_mask, save_volume};
use crate::scalar::Real;
use crate::training::LabelledSubject;

pub const INDEX_FILE: &str = "dataset.json";
pub const SCENE_FILE: &str = "scene.mhd";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub labels: Vec<String>,
    pub subjects: Vec<String>,
    /// Generator spec, when the data is synthetic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phantom: Option<PhantomSpec>,
}

pub fn subject_id(index: usize) -> String {
    format!("subject_{index:03}")
}

fn write_subject<T: Real>(dir: &Path, subject: &LabelledSubject<T>) -> Result<()> {
    let sub = dir.join(&subject.id);
    std::fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
    save_volume(&subject.scene, sub.join(SCENE_FILE))?;
    for (label, mask) in &subject.objects {
        save_mask(mask, sub.join(format!("{label}.mhd")))?;
    }
    Ok(())
}

/// Writes subjects and their index; the directory is created if needed.
pub fn save_dataset<T: Real>(
    dir: impl AsRef<Path>,
    subjects: &[LabelledSubject<T>],
    phantom: Option<PhantomSpec>,
) -> Result<DatasetIndex> {
    let dir = dir.as_ref();
    let first = subjects.first().ok_or_else(|| Error::param("subjects", "empty dataset"))?;
    let labels: Vec<String> = first.objects.iter().map(|(l, _)| l.clone()).collect();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for s in subjects {
        write_subject(dir, s)?;
    }
    let index = DatasetIndex {
        labels,
        subjects: subjects.iter().map(|s| s.id.clone()).collect(),
        phantom,
    };
    let path = dir.join(INDEX_FILE);
    let text = serde_json::to_string_pretty(&index)?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(index)
}

/// `n` phantom subjects as labelled subjects, ids `subject_000…`.
pub fn phantom_subjects<T: Real>(spec: &PhantomSpec, n: usize) -> Result<Vec<LabelledSubject<T>>> {
    (0..n)
        .map(|i| {
            let p = generate_phantom::<T>(spec, i as u64)?;
            Ok(LabelledSubject {
                id: subject_id(i),
                scene: p.scene,
                objects: p.objects,
            })
        })
        .collect()
}

pub fn load_dataset<T: Real>(dir: impl AsRef<Path>) -> Result<(DatasetIndex, Vec<LabelledSubject<T>>)> {
    let dir = dir.as_ref();
    let path = dir.join(INDEX_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let index: DatasetIndex = serde_json::from_str(&text)?;
    let subjects = index
        .subjects
        .iter()
        .map(|id| {
            let sub = dir.join(id);
            let scene = load_volume::<T>(sub.join(SCENE_FILE))?;
            let objects = index
                .labels
                .iter()
                .map(|l| Ok((l.clone(), load_mask::<T>(sub.join(format!("{l}.mhd")))?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(LabelledSubject {
                id: id.clone(),
                scene,
                objects,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((index, subjects))
}
