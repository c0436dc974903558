//! Model assemblies: object models in a common frame, optionally enhanced
//! with the learned pose relationship, and their JSON form.

use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::model::{ObjectKind, ObjectModel};
use super::voxelize::{overlap_count, voxelize_shape};
use crate::bscale::BScaleSettings;
use crate::error::{Error, Result};
use crate::pose::{DeltaF, ReferenceFrame, RelationF};
use crate::scalar::Real;

/// Learned relationship plus everything recognition needs to reproduce the
/// training-time encoding and frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Relationship<T: Real> {
    pub f: RelationF<T>,
    pub delta: DeltaF<T>,
    pub reference: ReferenceFrame<T>,
    pub bscale: BScaleSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelAssembly<T: Real> {
    pub models: Vec<ObjectModel<T>>,
    pub spacing: [T; 3],
    pub relationship: Option<Relationship<T>>,
}

/// A landmark shape together with what is needed to voxelize it.
#[derive(Debug, Clone, Copy)]
pub struct PlacedObject<'a, T: Real> {
    pub label: &'a str,
    pub kind: ObjectKind,
    pub points_per_slice: usize,
    pub landmarks: &'a [Vector3<T>],
}

/// Fails with the first overlapping pair, in input order.
pub fn check_disjoint<T: Real>(objects: &[PlacedObject<'_, T>], spacing: [T; 3]) -> Result<()> {
    if objects.len() < 2 {
        return Ok(());
    }
    let sets = objects
        .iter()
        .map(|o| voxelize_shape(o.landmarks, o.points_per_slice, o.kind, spacing))
        .collect::<Result<Vec<_>>>()?;
    for a in 0..sets.len() {
        for b in a + 1..sets.len() {
            let voxels = overlap_count(&sets[a], &sets[b]);
            if voxels > 0 {
                return Err(Error::Overlap {
                    a: objects[a].label.to_string(),
                    b: objects[b].label.to_string(),
                    voxels,
                });
            }
        }
    }
    Ok(())
}

/// Checks that the mean shapes voxelize to pairwise disjoint regions and
/// wraps them into an assembly without a relationship.
pub fn assemble_model<T: Real>(models: Vec<ObjectModel<T>>, spacing: [T; 3]) -> Result<ModelAssembly<T>> {
    if models.is_empty() {
        return Err(Error::param("models", "an assembly needs at least one object"));
    }
    for (i, m) in models.iter().enumerate() {
        if models[..i].iter().any(|o| o.label == m.label) {
            return Err(Error::Model(format!("duplicate object label `{}`", m.label)));
        }
    }
    let means: Vec<Vec<Vector3<T>>> = models.iter().map(|m| m.mean_shape()).collect();
    let placed: Vec<PlacedObject<'_, T>> = models
        .iter()
        .zip(&means)
        .map(|(m, lm)| PlacedObject {
            label: &m.label,
            kind: m.kind,
            points_per_slice: m.points_per_slice,
            landmarks: lm,
        })
        .collect();
    check_disjoint(&placed, spacing)?;
    Ok(ModelAssembly {
        models,
        spacing,
        relationship: None,
    })
}

impl<T: Real> ModelAssembly<T> {
    pub fn labels(&self) -> Vec<&str> {
        self.models.iter().map(|m| m.label.as_str()).collect()
    }

    pub fn model(&self, label: &str) -> Option<&ObjectModel<T>> {
        self.models.iter().find(|m| m.label == label)
    }

    pub fn relationship(&self) -> Result<&Relationship<T>> {
        self.relationship.as_ref().ok_or(Error::MissingRelationship)
    }

    /// Point that poses rotate and scale about: the training reference
    /// origin when known, else the centroid of all mean landmarks.
    pub fn center(&self) -> Vector3<T> {
        if let Some(r) = &self.relationship {
            return r.reference.origin;
        }
        let mut acc = Vector3::zeros();
        let mut n = 0usize;
        for m in &self.models {
            for p in m.mean_shape() {
                acc += p;
                n += 1;
            }
        }
        acc / T::from_usize_exact(n.max(1))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&AssemblyFile::from_assembly(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: AssemblyFile = serde_json::from_str(text)?;
        file.into_assembly()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

const FORMAT: &str = "bscale-recog-model";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssemblyFile {
    format: String,
    version: u32,
    reference_spacing: [f64; 3],
    objects: Vec<ObjectFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relationship: Option<RelationshipFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectFile {
    label: String,
    kind: ObjectKind,
    n: usize,
    points_per_slice: usize,
    slices: usize,
    mean: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// One entry per mode, each of length `3n`.
    eigenvectors: Vec<Vec<f64>>,
    retained: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationshipFile {
    s: f64,
    s_std: f64,
    t: [f64; 3],
    t_std: [f64; 3],
    #[serde(rename = "R")]
    r: [f64; 9],
    euler_std: [f64; 3],
    reference: ReferenceFile,
    bscale: BScaleSettings,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceFile {
    origin: [f64; 3],
    axes: [f64; 9],
    meb: f64,
}

fn f<T: Real>(x: T) -> f64 {
    x.as_f64()
}

fn v3<T: Real>(v: &Vector3<T>) -> [f64; 3] {
    [f(v.x), f(v.y), f(v.z)]
}

fn row_major<T: Real>(m: &Matrix3<T>) -> [f64; 9] {
    let mut out = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            out[3 * r + c] = f(m[(r, c)]);
        }
    }
    out
}

fn from_row_major<T: Real>(a: &[f64; 9]) -> Matrix3<T> {
    Matrix3::from_fn(|r, c| T::lit(a[3 * r + c]))
}

fn vec3<T: Real>(a: &[f64; 3]) -> Vector3<T> {
    Vector3::new(T::lit(a[0]), T::lit(a[1]), T::lit(a[2]))
}

impl AssemblyFile {
    fn from_assembly<T: Real>(a: &ModelAssembly<T>) -> Self {
        let objects = a
            .models
            .iter()
            .map(|m| ObjectFile {
                label: m.label.clone(),
                kind: m.kind,
                n: m.landmark_count(),
                points_per_slice: m.points_per_slice,
                slices: m.slices,
                mean: m.mean.iter().map(|&x| f(x)).collect(),
                eigenvalues: m.eigenvalues.iter().map(|&x| f(x)).collect(),
                eigenvectors: m
                    .eigenvectors
                    .column_iter()
                    .map(|c| c.iter().map(|&x| f(x)).collect())
                    .collect(),
                retained: m.retained,
            })
            .collect();
        let relationship = a.relationship.as_ref().map(|r| RelationshipFile {
            s: f(r.f.s),
            s_std: f(r.delta.s_std),
            t: v3(&r.f.t),
            t_std: v3(&r.delta.t_std),
            r: row_major(&r.f.r),
            euler_std: v3(&r.delta.euler_std),
            reference: ReferenceFile {
                origin: v3(&r.reference.origin),
                axes: row_major(&r.reference.axes),
                meb: f(r.reference.meb),
            },
            bscale: r.bscale.clone(),
        });
        AssemblyFile {
            format: FORMAT.into(),
            version: 1,
            reference_spacing: a.spacing.map(f),
            objects,
            relationship,
        }
    }

    fn into_assembly<T: Real>(self) -> Result<ModelAssembly<T>> {
        if self.format != FORMAT || self.version != 1 {
            return Err(Error::Model(format!(
                "unsupported model format `{}` version {}",
                self.format, self.version
            )));
        }
        let mut models = Vec::with_capacity(self.objects.len());
        for o in self.objects {
            let dim = 3 * o.n;
            if o.mean.len() != dim
                || o.points_per_slice == 0
                || o.points_per_slice * o.slices != o.n
                || o.eigenvalues.len() != o.eigenvectors.len()
                || o.eigenvectors.iter().any(|v| v.len() != dim)
                || o.retained > o.eigenvalues.len()
            {
                return Err(Error::Model(format!("object `{}` has inconsistent sizes", o.label)));
            }
            let cols: Vec<DVector<T>> = o
                .eigenvectors
                .iter()
                .map(|v| DVector::from_iterator(dim, v.iter().map(|&x| T::lit(x))))
                .collect();
            models.push(ObjectModel {
                label: o.label,
                kind: o.kind,
                points_per_slice: o.points_per_slice,
                slices: o.slices,
                mean: DVector::from_iterator(dim, o.mean.iter().map(|&x| T::lit(x))),
                eigenvalues: o.eigenvalues.iter().map(|&x| T::lit(x)).collect(),
                eigenvectors: if cols.is_empty() {
                    DMatrix::zeros(dim, 0)
                } else {
                    DMatrix::from_columns(&cols)
                },
                retained: o.retained,
            });
        }
        let relationship = self.relationship.map(|r| Relationship {
            f: RelationF {
                s: T::lit(r.s),
                t: vec3(&r.t),
                r: from_row_major(&r.r),
            },
            delta: DeltaF {
                s_std: T::lit(r.s_std),
                t_std: vec3(&r.t_std),
                euler_std: vec3(&r.euler_std),
            },
            reference: ReferenceFrame {
                origin: vec3(&r.reference.origin),
                axes: from_row_major(&r.reference.axes),
                meb: T::lit(r.reference.meb),
            },
            bscale: r.bscale,
        });
        Ok(ModelAssembly {
            models,
            spacing: self.reference_spacing.map(T::lit),
            relationship,
        })
    }
}
