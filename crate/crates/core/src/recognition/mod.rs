//! One-shot placement of a model assembly in a test scene.

mod edt;

pub use edt::distance_transform;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::pose::{aabb_diagonal, rotation_from_euler_xyz, EulerXyz, PcSystem};
use crate::scalar::Real;
use crate::shape::{check_disjoint, landmark_object, ModelAssembly, PlacedObject, StartRule};
use crate::training::{intensity_structure, IntensityStructure};
use crate::volume::{BinaryMask, Scene};

/// Placement of an assembly: `x ↦ s·R·(x − c) + c + t` about the assembly
/// center `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose<T: Real> {
    pub s: T,
    pub t: Vector3<T>,
    pub r: Matrix3<T>,
}

impl<T: Real> Pose<T> {
    pub fn identity() -> Self {
        Self {
            s: T::one(),
            t: Vector3::zeros(),
            r: Matrix3::identity(),
        }
    }

    /// Written as `x + (s·R − I)(x − c) + t` so the identity pose is exact.
    pub fn apply(&self, x: &Vector3<T>, center: &Vector3<T>) -> Vector3<T> {
        let m = self.r * self.s - Matrix3::identity();
        x + m * (x - center) + self.t
    }
}

/// Mean shape of one object mapped into the test scene.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedShape<T: Real> {
    pub label: String,
    pub landmarks: Vec<Vector3<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionResult<T: Real> {
    pub pose: Pose<T>,
    /// Where the object structure's centroid is predicted to be.
    pub predicted_origin: Vector3<T>,
    /// Predicted principal axes of the object structure.
    pub predicted_axes: Matrix3<T>,
    pub placed: Vec<PlacedShape<T>>,
    pub pc_bi: PcSystem<T>,
    pub interval: (T, T),
    pub sigma: T,
    pub wbs_voxels: usize,
}

/// Maps every mean shape through `pose` about the assembly center.
pub fn apply_pose<T: Real>(assembly: &ModelAssembly<T>, pose: &Pose<T>) -> Vec<PlacedShape<T>> {
    let c = assembly.center();
    assembly
        .models
        .iter()
        .map(|m| PlacedShape {
            label: m.label.clone(),
            landmarks: m.mean_shape().iter().map(|x| pose.apply(x, &c)).collect(),
        })
        .collect()
}

/// Pose implied by a test image's intensity structure under the learned
/// relationship. Pure arithmetic: no search.
pub fn recognize_from_structure<T: Real>(
    assembly: &ModelAssembly<T>,
    structure: &IntensityStructure<T>,
) -> Result<RecognitionResult<T>> {
    let rel = assembly.relationship()?;
    let f = &rel.f;
    let reference = &rel.reference;
    if !(reference.meb > T::zero()) {
        return Err(Error::Model("reference MEB diagonal must be positive".into()));
    }
    let predicted_origin = structure.pc.origin + f.t;
    let predicted_axes = f.r * structure.pc.axes;
    let pose = Pose {
        s: f.s * structure.meb / reference.meb,
        t: predicted_origin - reference.origin,
        r: predicted_axes * reference.axes.transpose(),
    };
    let placed = apply_pose(assembly, &pose);
    Ok(RecognitionResult {
        pose,
        predicted_origin,
        predicted_axes,
        placed,
        pc_bi: structure.pc.clone(),
        interval: structure.interval,
        sigma: structure.sigma,
        wbs_voxels: structure.voxels,
    })
}

/// Coarse recognition: encode the test scene with the training settings,
/// threshold, take its PC system and apply the learned relationship.
pub fn coarse_recognize<T: Real>(scene: &Scene<T>, assembly: &ModelAssembly<T>) -> Result<RecognitionResult<T>> {
    let settings = &assembly.relationship()?.bscale;
    let (structure, _) = intensity_structure(scene, settings)?;
    recognize_from_structure(assembly, &structure)
}

/// Voxelizes placed shapes and fails on the first overlapping pair.
pub fn check_placement_disjoint<T: Real>(assembly: &ModelAssembly<T>, placed: &[PlacedShape<T>]) -> Result<()> {
    let objects: Vec<PlacedObject<'_, T>> = assembly
        .models
        .iter()
        .zip(placed)
        .map(|(m, p)| PlacedObject {
            label: &m.label,
            kind: m.kind,
            points_per_slice: m.points_per_slice,
            landmarks: &p.landmarks,
        })
        .collect();
    check_disjoint(&objects, assembly.spacing)
}

/// Voxels above `cutoff × max` intensity.
pub fn body_mask<T: Real>(scene: &Scene<T>, cutoff: f64) -> BinaryMask<T> {
    let level = scene.max_value() * T::lit(cutoff);
    scene.map(|&v| v > level)
}

/// Fraction of landmarks whose nearest voxel lies inside `mask`.
pub fn containment_fraction<T: Real>(placed: &[PlacedShape<T>], mask: &BinaryMask<T>) -> f64 {
    let mut total = 0usize;
    let mut inside = 0usize;
    for p in placed {
        for x in &p.landmarks {
            total += 1;
            if let Some(v) = mask.grid().nearest_voxel(x) {
                if *mask.get(v) {
                    inside += 1;
                }
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        inside as f64 / total as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkinRefinement<T: Real> {
    pub pose: Pose<T>,
    pub placed: Vec<PlacedShape<T>>,
    /// Translation added to the coarse pose.
    pub shift: Vector3<T>,
    /// Factor applied to the coarse scale (1 unless scale adjustment is on).
    pub scale_factor: T,
    pub containment: f64,
}

fn centroid<T: Real>(xs: &[Vector3<T>]) -> Vector3<T> {
    xs.iter().fold(Vector3::zeros(), |a, x| a + x) / T::from_usize_exact(xs.len())
}

/// Aligns the placed skin model with the skin found in the test image.
///
/// The test skin is landmarked with the skin model's own layout, so the
/// comparison is between like point sets: their centroids fix the
/// translation and, optionally, the ratio of their box diagonals fixes the
/// scale. Rotation is left alone. Returns `None`, with a logged notice,
/// when the assembly has no model named `skin_label`.
pub fn refine_with_skin<T: Real>(
    assembly: &ModelAssembly<T>,
    result: &RecognitionResult<T>,
    skin_mask: &BinaryMask<T>,
    skin_label: &str,
    adjust_scale: bool,
) -> Result<Option<SkinRefinement<T>>> {
    let Some(model) = assembly.model(skin_label) else {
        log::warn!("no `{skin_label}` model in the assembly; skin refinement skipped");
        return Ok(None);
    };
    if skin_mask.count() == 0 {
        log::warn!("empty skin mask; skin refinement skipped");
        return Ok(None);
    }
    let observed = landmark_object(skin_mask, model.points_per_slice, model.slices, StartRule::MaxX)?;
    let center = assembly.center();
    let mut pose = result.pose.clone();
    let mut scale_factor = T::one();
    if adjust_scale {
        let placed_skin: Vec<Vector3<T>> = model.mean_shape().iter().map(|x| pose.apply(x, &center)).collect();
        let (a, b) = (aabb_diagonal(observed.iter().copied()), aabb_diagonal(placed_skin));
        if let (Some(a), Some(b)) = (a, b) {
            if b > T::zero() && a > T::zero() {
                scale_factor = a / b;
                pose.s *= scale_factor;
            }
        }
    }
    let placed_skin: Vec<Vector3<T>> = model.mean_shape().iter().map(|x| pose.apply(x, &center)).collect();
    let shift = centroid(&observed) - centroid(&placed_skin);
    pose.t += shift;
    let placed = apply_pose(assembly, &pose);
    let containment = containment_fraction(&placed, skin_mask);
    Ok(Some(SkinRefinement {
        pose,
        placed,
        shift,
        scale_factor,
        containment,
    }))
}

/// Small local search bounded by the learned spread: every combination of
/// {−1, 0, +1} standard deviations in scale, the three translations and
/// the three Euler angles (3⁷ poses). Each candidate is scored by the mean
/// distance from its placed landmarks to `mask`; the coarse pose wins ties.
pub fn probe_delta_f<T: Real>(
    assembly: &ModelAssembly<T>,
    coarse: &Pose<T>,
    mask: &BinaryMask<T>,
) -> Result<(Pose<T>, T)> {
    let rel = assembly.relationship()?;
    let d = &rel.delta;
    let dt = distance_transform(mask);
    let center = assembly.center();
    let means: Vec<Vec<Vector3<T>>> = assembly.models.iter().map(|m| m.mean_shape()).collect();
    let far = dt
        .data()
        .iter()
        .copied()
        .filter(|v| v.is_finite_value())
        .fold(T::zero(), T::max)
        + T::one();
    let score = |pose: &Pose<T>| -> T {
        let mut sum = T::zero();
        let mut n = 0usize;
        for shape in &means {
            for x in shape {
                let p = pose.apply(x, &center);
                let v = match dt.grid().nearest_voxel(&p) {
                    Some(v) => *dt.get(v),
                    None => far,
                };
                sum += if v.is_finite_value() { v } else { far };
                n += 1;
            }
        }
        sum / T::from_usize_exact(n.max(1))
    };
    let steps = [T::zero(), -T::one(), T::one()];
    let deg = T::pi() / T::lit(180.0);
    let mut best = (coarse.clone(), score(coarse));
    for code in 1..3usize.pow(7) {
        let mut c = code;
        let mut u = [T::zero(); 7];
        for slot in &mut u {
            *slot = steps[c % 3];
            c /= 3;
        }
        let s = coarse.s * (T::one() + u[0] * d.s_std / rel.f.s.max(T::lit(1e-12)));
        if !(s > T::zero()) {
            continue;
        }
        let t = coarse.t + Vector3::new(u[1] * d.t_std.x, u[2] * d.t_std.y, u[3] * d.t_std.z);
        let dr = rotation_from_euler_xyz(EulerXyz {
            heading: u[4] * d.euler_std.x * deg,
            attitude: u[5] * d.euler_std.y * deg,
            bank: u[6] * d.euler_std.z * deg,
        });
        let candidate = Pose { s, t, r: dr * coarse.r };
        let v = score(&candidate);
        if v < best.1 {
            best = (candidate, v);
        }
    }
    Ok(best)
}
