//! Similarity transforms and generalized Procrustes alignment.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Landmark displacement below which Procrustes iteration stops.
pub const GPA_TOLERANCE: f64 = 1e-9;
pub const GPA_MAX_ITERATIONS: usize = 50;
/// Second variance below this fraction of the first means collinear.
const COLLINEAR_TOL: f64 = 1e-12;

/// `x ↦ s·R·x + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTransform<T: Real> {
    pub s: T,
    pub r: Matrix3<T>,
    pub t: Vector3<T>,
}

impl<T: Real> SimilarityTransform<T> {
    pub fn identity() -> Self {
        Self {
            s: T::one(),
            r: Matrix3::identity(),
            t: Vector3::zeros(),
        }
    }

    pub fn apply(&self, x: &Vector3<T>) -> Vector3<T> {
        self.r * x * self.s + self.t
    }

    pub fn apply_all(&self, xs: &[Vector3<T>]) -> Vec<Vector3<T>> {
        xs.iter().map(|x| self.apply(x)).collect()
    }

    pub fn inverse(&self) -> Self {
        let rt = self.r.transpose();
        let s = T::one() / self.s;
        Self {
            s,
            r: rt,
            t: -(rt * self.t) * s,
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            s: self.s * other.s,
            r: self.r * other.r,
            t: self.r * other.t * self.s + self.t,
        }
    }
}

fn centroid<T: Real>(xs: &[Vector3<T>]) -> Vector3<T> {
    xs.iter().fold(Vector3::zeros(), |a, x| a + x) / T::from_usize_exact(xs.len())
}

/// Whether all points lie (numerically) on one line.
pub fn is_collinear<T: Real>(xs: &[Vector3<T>]) -> bool {
    if xs.len() < 3 {
        return true;
    }
    let c = centroid(xs);
    let mut cov = Matrix3::zeros();
    for x in xs {
        let d = x - c;
        cov += d * d.transpose();
    }
    let mut ev: Vec<T> = cov.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    !(ev[0] > T::zero()) || ev[1] <= ev[0] * T::lit(COLLINEAR_TOL)
}

/// Least-squares similarity (no reflection) taking `src` onto `dst`.
pub fn umeyama<T: Real>(src: &[Vector3<T>], dst: &[Vector3<T>]) -> Result<SimilarityTransform<T>> {
    if src.len() != dst.len() || src.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} source vs {} target landmarks",
            src.len(),
            dst.len()
        )));
    }
    let n = T::from_usize_exact(src.len());
    let (mu_s, mu_d) = (centroid(src), centroid(dst));
    let mut cov = Matrix3::zeros();
    let mut var_s = T::zero();
    for (a, b) in src.iter().zip(dst) {
        let (da, db) = (a - mu_s, b - mu_d);
        cov += db * da.transpose();
        var_s += da.norm_squared();
    }
    cov /= n;
    var_s /= n;
    if !(var_s > T::zero()) {
        return Err(Error::RankDeficientShape { index: 0 });
    }
    let svd = cov.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    // Singular values come unsorted; the reflection fix must hit the smallest.
    let sv = svd.singular_values;
    let mut dd = Matrix3::identity();
    if u.determinant() * v_t.determinant() < T::zero() {
        dd[(sv.imin(), sv.imin())] = -T::one();
    }
    let r = u * dd * v_t;
    let trace = (0..3).fold(T::zero(), |a, i| a + sv[i] * dd[(i, i)]);
    let s = trace / var_s;
    let t = mu_d - r * mu_s * s;
    Ok(SimilarityTransform { s, r, t })
}

/// Generalized Procrustes alignment without reflection.
///
/// The gauge is fixed by the first shape: the evolving mean is re-aligned
/// onto it after every update, so aligned shapes stay in its frame and
/// scale.
pub fn align_shapes<T: Real>(
    shapes: &[Vec<Vector3<T>>],
) -> Result<(Vec<Vec<Vector3<T>>>, Vec<SimilarityTransform<T>>)> {
    if shapes.len() < 2 {
        return Err(Error::param("shapes", format!("need at least 2 shapes, got {}", shapes.len())));
    }
    let n = shapes[0].len();
    if let Some(bad) = shapes.iter().position(|s| s.len() != n) {
        return Err(Error::ShapeMismatch(format!(
            "shape {bad} has {} landmarks, expected {n}",
            shapes[bad].len()
        )));
    }
    if let Some(index) = shapes.iter().position(|s| is_collinear(s)) {
        return Err(Error::RankDeficientShape { index });
    }
    let count = T::from_usize_exact(shapes.len());
    let mut mean = shapes[0].clone();
    let mut transforms = vec![SimilarityTransform::identity(); shapes.len()];
    for _ in 0..GPA_MAX_ITERATIONS {
        for (t, s) in transforms.iter_mut().zip(shapes) {
            *t = umeyama(s, &mean)?;
        }
        let mut next = vec![Vector3::zeros(); n];
        for (t, s) in transforms.iter().zip(shapes) {
            for (acc, x) in next.iter_mut().zip(s) {
                *acc += t.apply(x);
            }
        }
        for p in &mut next {
            *p /= count;
        }
        let gauge = umeyama(&next, &shapes[0])?;
        let next = gauge.apply_all(&next);
        let moved = next
            .iter()
            .zip(&mean)
            .fold(T::zero(), |a, (p, q)| a.max((p - q).norm()));
        mean = next;
        if moved < T::lit(GPA_TOLERANCE) {
            break;
        }
    }
    for (t, s) in transforms.iter_mut().zip(shapes) {
        *t = umeyama(s, &mean)?;
    }
    let aligned = transforms.iter().zip(shapes).map(|(t, s)| t.apply_all(s)).collect();
    Ok((aligned, transforms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::{rot_x, rot_y, rot_z};
    use approx::assert_relative_eq;

    fn shape() -> Vec<Vector3<f64>> {
        vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(4.0, 0.5, 0.0),
            Vector3::new(1.0, 3.0, 0.2),
            Vector3::new(0.5, 1.0, 2.5),
            Vector3::new(3.0, 2.0, 1.0),
            Vector3::new(-1.0, 0.7, 0.4),
        ]
    }

    #[test]
    fn identical_shapes_give_identity() {
        let (aligned, ts) = align_shapes(&[shape(), shape()]).unwrap();
        for t in &ts {
            assert_relative_eq!(t.s, 1.0, epsilon = 1e-12);
            assert_relative_eq!(t.r, Matrix3::identity(), epsilon = 1e-12);
            assert_relative_eq!(t.t, Vector3::zeros(), epsilon = 1e-12);
        }
        for (a, b) in aligned[1].iter().zip(shape()) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotated_copy_recovers_inverse_rotation() {
        let rz = rot_z(30f64.to_radians());
        let copy: Vec<_> = shape().iter().map(|p| rz * p).collect();
        let (_, ts) = align_shapes(&[shape(), copy]).unwrap();
        assert_relative_eq!(ts[1].r, rot_z(-30f64.to_radians()), epsilon = 1e-6);
    }

    #[test]
    fn scaled_copy_recovers_half() {
        let copy: Vec<_> = shape().iter().map(|p| p * 2.0).collect();
        let (_, ts) = align_shapes(&[shape(), copy]).unwrap();
        assert_relative_eq!(ts[1].s, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn umeyama_handles_reflection_free_planar_sets() {
        let flat: Vec<_> = shape().iter().map(|p| Vector3::new(p.x, p.y, 0.0)).collect();
        let q = rot_x(0.4) * rot_y(-1.1);
        let moved: Vec<_> = flat.iter().map(|p| q * p * 1.7 + Vector3::new(1.0, 2.0, 3.0)).collect();
        let t = umeyama(&flat, &moved).unwrap();
        assert_relative_eq!(t.r, q, epsilon = 1e-9);
        assert_relative_eq!(t.s, 1.7, epsilon = 1e-9);
        assert!(t.r.determinant() > 0.0);
    }

    #[test]
    fn mirrored_target_gets_proper_rotation() {
        let mirrored: Vec<_> = shape().iter().map(|p| Vector3::new(-p.x, p.y, p.z)).collect();
        let t = umeyama(&shape(), &mirrored).unwrap();
        assert_relative_eq!(t.r.determinant(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn collinear_rejected() {
        let line: Vec<_> = (0..5).map(|i| Vector3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert!(matches!(
            align_shapes(&[shape()[..5].to_vec(), line]),
            Err(Error::RankDeficientShape { index: 1 })
        ));
        assert!(align_shapes(&[shape()]).is_err());
        assert!(matches!(
            align_shapes(&[shape(), shape()[..4].to_vec()]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn transform_algebra() {
        let a = SimilarityTransform { s: 2.0, r: rot_z(0.3), t: Vector3::new(1.0, 0.0, -2.0) };
        let b = SimilarityTransform { s: 0.7, r: rot_x(-0.5), t: Vector3::new(0.0, 3.0, 1.0) };
        let p = Vector3::new(0.3, -0.8, 1.9);
        assert_relative_eq!(a.compose(&b).apply(&p), a.apply(&b.apply(&p)), epsilon = 1e-12);
        assert_relative_eq!(a.inverse().apply(&a.apply(&p)), p, epsilon = 1e-12);
    }
}
