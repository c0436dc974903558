//! The learned relationship `F = (s, t, R)` between the intensity structure
//! system and the shape structure system, with its spread `ΔF`.

use nalgebra::{Matrix3, Vector3};

use super::pc::PcSystem;
use super::rotation::{estimate_rotation, euler_xyz, mean_rotation};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Mean relationship mapping a subject's intensity structure onto its
/// object structure.
///
/// `R` acts in the b → o direction: `axes_o ≈ R · axes_b`. It is therefore
/// the transpose of the per-subject rotation returned by
/// [`estimate_rotation`].
#[derive(Debug, Clone, PartialEq)]
pub struct RelationF<T: Real> {
    pub s: T,
    pub t: Vector3<T>,
    pub r: Matrix3<T>,
}

impl<T: Real> RelationF<T> {
    pub fn identity() -> Self {
        Self {
            s: T::one(),
            t: Vector3::zeros(),
            r: Matrix3::identity(),
        }
    }
}

/// Per-component spread of `F` over the training set (population std).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeltaF<T: Real> {
    pub s_std: T,
    pub t_std: Vector3<T>,
    /// Heading, attitude, bank, in degrees.
    pub euler_std: Vector3<T>,
}

/// What one training subject contributes: both structure systems and both
/// scale features.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingObservation<T: Real> {
    pub pc_o: PcSystem<T>,
    pub pc_b: PcSystem<T>,
    pub meb_o: T,
    pub meb_b: T,
}

impl<T: Real> TrainingObservation<T> {
    pub fn scale(&self) -> Result<T> {
        if !(self.meb_b > T::zero()) {
            return Err(Error::Degenerate("intensity structure has zero extent".into()));
        }
        Ok(self.meb_o / self.meb_b)
    }

    pub fn translation(&self) -> Vector3<T> {
        self.pc_o.origin - self.pc_b.origin
    }

    /// `R_i` in the b → o direction.
    pub fn rotation(&self) -> Matrix3<T> {
        estimate_rotation(&self.pc_o, &self.pc_b).transpose()
    }
}

/// Training-frame pose that placements are expressed against: mean object
/// centroid, mean object axes and mean object MEB diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFrame<T: Real> {
    pub origin: Vector3<T>,
    pub axes: Matrix3<T>,
    pub meb: T,
}

pub fn reference_frame<T: Real>(obs: &[TrainingObservation<T>]) -> Result<ReferenceFrame<T>> {
    if obs.is_empty() {
        return Err(Error::param("training", "no training subjects"));
    }
    let n = T::from_usize_exact(obs.len());
    let origin = obs.iter().fold(Vector3::zeros(), |a, o| a + o.pc_o.origin) / n;
    let axes_list: Vec<Matrix3<T>> = obs.iter().map(|o| o.pc_o.axes).collect();
    let axes = mean_rotation(&axes_list)
        .ok_or_else(|| Error::Degenerate("object axes average to nothing".into()))?;
    let meb = obs.iter().fold(T::zero(), |a, o| a + o.meb_o) / n;
    Ok(ReferenceFrame { origin, axes, meb })
}

fn mean_std<T: Real>(xs: impl Iterator<Item = T> + Clone) -> (T, T) {
    let n = T::from_usize_exact(xs.clone().count());
    let mean = xs.clone().fold(T::zero(), |a, x| a + x) / n;
    let var = xs.fold(T::zero(), |a, x| a + (x - mean) * (x - mean)) / n;
    (mean, var.sqrt())
}

/// Averages per-subject relationships: mean scale ratio, mean centroid
/// offset, chordal-mean rotation, and their population spreads.
///
/// A single subject is accepted and yields a zero spread.
pub fn learn_relationship<T: Real>(obs: &[TrainingObservation<T>]) -> Result<(RelationF<T>, DeltaF<T>)> {
    if obs.is_empty() {
        return Err(Error::param("training", "no training subjects"));
    }
    let scales = obs.iter().map(|o| o.scale()).collect::<Result<Vec<T>>>()?;
    let (s, s_std) = mean_std(scales.iter().copied());

    let ts: Vec<Vector3<T>> = obs.iter().map(|o| o.translation()).collect();
    let mut t = Vector3::zeros();
    let mut t_std = Vector3::zeros();
    for a in 0..3 {
        let (m, sd) = mean_std(ts.iter().map(|v| v[a]));
        t[a] = m;
        t_std[a] = sd;
    }

    let rs: Vec<Matrix3<T>> = obs.iter().map(|o| o.rotation()).collect();
    let r = mean_rotation(&rs).ok_or_else(|| Error::Degenerate("rotations cancel out".into()))?;

    let deviations: Vec<[T; 3]> = rs
        .iter()
        .map(|ri| euler_xyz(&(ri * r.transpose())).to_degrees())
        .collect();
    let mut euler_std = Vector3::zeros();
    for a in 0..3 {
        euler_std[a] = mean_std(deviations.iter().map(|d| d[a])).1;
    }

    Ok((RelationF { s, t, r }, DeltaF { s_std, t_std, euler_std }))
}
