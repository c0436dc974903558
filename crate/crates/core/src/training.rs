//! Building an enhanced model assembly from training subjects.

use nalgebra::Vector3;

use crate::bscale::{BScaleSettings, Encoded};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::pose::{
    learn_relationship, meb_diagonal, pc_from_mask, reference_frame, PcSystem, TrainingObservation,
};
use crate::scalar::Real;
use crate::shape::{
    align_shapes, assemble_model, build_object_model, landmark_object, umeyama, ModelAssembly, ObjectKind,
    Relationship, StartRule,
};
use crate::volume::{BinaryMask, Scene};

/// PC system and MEB diagonal of a subject's thresholded WBs mask.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityStructure<T: Real> {
    pub pc: PcSystem<T>,
    pub meb: T,
    pub interval: (T, T),
    pub sigma: T,
    pub voxels: usize,
}

/// Encodes a scene and summarizes its rough-object mask.
pub fn intensity_structure<T: Real>(
    scene: &Scene<T>,
    settings: &BScaleSettings,
) -> Result<(IntensityStructure<T>, Encoded<T>)> {
    let enc = settings.encode_weighted(scene)?;
    let voxels = enc.mask.count();
    let pc = pc_from_mask(&enc.mask)
        .map_err(|e| Error::RecognitionFailed(format!("WBs mask with {voxels} voxels: {e}")))?;
    let meb = meb_diagonal(&enc.mask)?;
    Ok((
        IntensityStructure {
            pc,
            meb,
            interval: enc.interval,
            sigma: enc.sigma,
            voxels,
        },
        enc,
    ))
}

/// PC system and MEB diagonal of the union of a subject's object masks.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectStructure<T: Real> {
    pub pc: PcSystem<T>,
    pub meb: T,
}

pub fn object_structure<'a, T: Real>(masks: impl IntoIterator<Item = &'a BinaryMask<T>>) -> Result<ObjectStructure<T>> {
    let union = BinaryMask::union(masks)?;
    Ok(ObjectStructure {
        pc: pc_from_mask(&union)?,
        meb: meb_diagonal(&union)?,
    })
}

/// Landmarks of one object under the configured per-label counts.
pub fn landmark_with_config<T: Real>(mask: &BinaryMask<T>, label: &str, cfg: &Config) -> Result<Vec<Vector3<T>>> {
    let (m, slices) = cfg.landmarking_for(label);
    landmark_object(mask, m, slices, StartRule::MaxX)
}

/// What training needs from one subject, for the chosen object subset.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSubject<'a, T: Real> {
    /// Landmarks per object, in the order of the training labels.
    pub shapes: &'a [&'a [Vector3<T>]],
    pub objects: &'a ObjectStructure<T>,
    pub intensity: &'a IntensityStructure<T>,
}

/// Builds models for `labels`, checks their non-overlap, and learns the
/// relationship between intensity and object structure.
///
/// Shapes of all objects are aligned jointly, then mapped back onto the
/// average raw shape so the model lives in physical scanner coordinates.
/// A single subject is accepted (the shapes are used as they are).
pub fn train_assembly<T: Real>(
    labels: &[&str],
    subjects: &[TrainingSubject<'_, T>],
    cfg: &Config,
    spacing: [T; 3],
) -> Result<ModelAssembly<T>> {
    cfg.validate()?;
    if labels.is_empty() {
        return Err(Error::param("objects", "no objects selected"));
    }
    if subjects.is_empty() {
        return Err(Error::param("training", "no training subjects"));
    }
    for (i, s) in subjects.iter().enumerate() {
        if s.shapes.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "subject {i} has {} shapes for {} objects",
                s.shapes.len(),
                labels.len()
            )));
        }
    }
    let counts: Vec<usize> = subjects[0].shapes.iter().map(|s| s.len()).collect();
    let joined: Vec<Vec<Vector3<T>>> = subjects
        .iter()
        .map(|s| s.shapes.iter().flat_map(|x| x.iter().copied()).collect())
        .collect();
    let aligned = if joined.len() >= 2 {
        let (aligned, _) = align_shapes(&joined)?;
        let n = T::from_usize_exact(joined.len());
        let len = joined[0].len();
        let mean = |set: &[Vec<Vector3<T>>]| -> Vec<Vector3<T>> {
            (0..len)
                .map(|i| set.iter().fold(Vector3::zeros(), |a, s| a + s[i]) / n)
                .collect()
        };
        let anchor = umeyama(&mean(&aligned), &mean(&joined))?;
        aligned.iter().map(|s| anchor.apply_all(s)).collect()
    } else {
        joined
    };

    let mut models = Vec::with_capacity(labels.len());
    let mut offset = 0;
    for (label, &count) in labels.iter().zip(&counts) {
        let per_object: Vec<Vec<Vector3<T>>> = aligned.iter().map(|s| s[offset..offset + count].to_vec()).collect();
        offset += count;
        let kind = if cfg.is_shell(label) { ObjectKind::Shell } else { ObjectKind::Solid };
        let (m, _) = cfg.landmarking_for(label);
        models.push(build_object_model(label, kind, m, &per_object, cfg.variance_retained)?);
    }
    let mut assembly = assemble_model(models, spacing)?;

    let obs: Vec<TrainingObservation<T>> = subjects
        .iter()
        .map(|s| TrainingObservation {
            pc_o: s.objects.pc.clone(),
            pc_b: s.intensity.pc.clone(),
            meb_o: s.objects.meb,
            meb_b: s.intensity.meb,
        })
        .collect();
    let (f, delta) = learn_relationship(&obs)?;
    let reference = reference_frame(&obs)?;
    assembly.relationship = Some(Relationship {
        f,
        delta,
        reference,
        bscale: BScaleSettings::from_config(cfg),
    });
    Ok(assembly)
}

/// One subject given as its scene and labelled object masks.
#[derive(Debug, Clone)]
pub struct LabelledSubject<T: Real> {
    pub id: String,
    pub scene: Scene<T>,
    pub objects: Vec<(String, BinaryMask<T>)>,
}

impl<T: Real> LabelledSubject<T> {
    pub fn mask(&self, label: &str) -> Result<&BinaryMask<T>> {
        self.objects
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::param("objects", format!("subject `{}` has no object `{label}`", self.id)))
    }
}

/// End-to-end training from scenes and masks: encodes every scene,
/// landmarks every object and calls [`train_assembly`].
pub fn train_from_subjects<T: Real>(
    subjects: &[LabelledSubject<T>],
    labels: &[&str],
    cfg: &Config,
) -> Result<ModelAssembly<T>> {
    let settings = BScaleSettings::from_config(cfg);
    let first = subjects
        .first()
        .ok_or_else(|| Error::param("training", "no training subjects"))?;
    let mut shapes = Vec::with_capacity(subjects.len());
    let mut objects = Vec::with_capacity(subjects.len());
    let mut intensity = Vec::with_capacity(subjects.len());
    for s in subjects {
        let masks = labels.iter().map(|l| s.mask(l)).collect::<Result<Vec<_>>>()?;
        let lm = labels
            .iter()
            .zip(&masks)
            .map(|(l, m)| landmark_with_config(m, l, cfg))
            .collect::<Result<Vec<_>>>()?;
        shapes.push(lm);
        objects.push(object_structure(masks.iter().copied())?);
        intensity.push(intensity_structure(&s.scene, &settings)?.0);
    }
    let refs: Vec<Vec<&[Vector3<T>]>> = shapes.iter().map(|s| s.iter().map(|v| v.as_slice()).collect()).collect();
    let ts: Vec<TrainingSubject<'_, T>> = (0..subjects.len())
        .map(|i| TrainingSubject {
            shapes: &refs[i],
            objects: &objects[i],
            intensity: &intensity[i],
        })
        .collect();
    train_assembly(labels, &ts, cfg, first.scene.spacing())
}
