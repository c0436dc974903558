//! Rotation utilities: PC-system rotation, Euler decomposition and
//! chordal averaging.

use nalgebra::{Matrix3, Matrix4, Rotation3, SymmetricEigen, UnitQuaternion, Vector4};

use super::pc::PcSystem;
use crate::scalar::Real;

/// Attitude within this many degrees of ±90° is reported as gimbal-adjacent.
pub const GIMBAL_MARGIN_DEG: f64 = 0.1;

/// `R` with `axes_b = R · axes_o`.
pub fn estimate_rotation<T: Real>(pc_o: &PcSystem<T>, pc_b: &PcSystem<T>) -> Matrix3<T> {
    pc_b.axes * pc_o.axes.transpose()
}

pub fn rot_x<T: Real>(angle: T) -> Matrix3<T> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(
        T::one(), T::zero(), T::zero(),
        T::zero(), c, -s,
        T::zero(), s, c,
    )
}

pub fn rot_y<T: Real>(angle: T) -> Matrix3<T> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(
        c, T::zero(), s,
        T::zero(), T::one(), T::zero(),
        -s, T::zero(), c,
    )
}

pub fn rot_z<T: Real>(angle: T) -> Matrix3<T> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(
        c, -s, T::zero(),
        s, c, T::zero(),
        T::zero(), T::zero(), T::one(),
    )
}

/// Heading (x), attitude (y) and bank (z) angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerXyz<T> {
    pub heading: T,
    pub attitude: T,
    pub bank: T,
}

impl<T: Real> EulerXyz<T> {
    pub fn to_array(self) -> [T; 3] {
        [self.heading, self.attitude, self.bank]
    }

    pub fn to_degrees(self) -> [T; 3] {
        let k = T::lit(180.0) / T::pi();
        [self.heading * k, self.attitude * k, self.bank * k]
    }

    /// Whether the attitude sits within [`GIMBAL_MARGIN_DEG`] of ±90°.
    pub fn near_gimbal_lock(self) -> bool {
        let att = self.attitude.as_f64().to_degrees().abs();
        (90.0 - att).abs() <= GIMBAL_MARGIN_DEG
    }
}

/// Intrinsic x–y–z rotation: `Rx(heading) · Ry(attitude) · Rz(bank)`.
pub fn rotation_from_euler_xyz<T: Real>(e: EulerXyz<T>) -> Matrix3<T> {
    rot_x(e.heading) * rot_y(e.attitude) * rot_z(e.bank)
}

/// Inverse of [`rotation_from_euler_xyz`], attitude in `[−π/2, π/2]`.
pub fn euler_xyz<T: Real>(r: &Matrix3<T>) -> EulerXyz<T> {
    let sa = r[(0, 2)].clamp(-T::one(), T::one());
    let attitude = sa.asin();
    let lock = T::one() - T::lit(1e-12);
    if sa.abs() >= lock {
        // Heading and bank are coupled; put everything in heading.
        let heading = r[(2, 1)].atan2(r[(1, 1)]);
        return EulerXyz {
            heading: if sa > T::zero() { heading } else { -heading },
            attitude,
            bank: T::zero(),
        };
    }
    EulerXyz {
        heading: (-r[(1, 2)]).atan2(r[(2, 2)]),
        attitude,
        bank: (-r[(0, 1)]).atan2(r[(0, 0)]),
    }
}

/// Unit quaternion of a rotation matrix, as `(w, x, y, z)`.
fn quat_of<T: Real>(r: &Matrix3<T>) -> Vector4<T> {
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r));
    Vector4::new(q.w, q.i, q.j, q.k)
}

/// Chordal mean of rotations.
///
/// Quaternion signs are aligned to the dominant eigenvector of `Σ q qᵀ`
/// (which does not depend on input order or sign), then averaged and
/// normalized.
pub fn mean_rotation<T: Real>(rotations: &[Matrix3<T>]) -> Option<Matrix3<T>> {
    if rotations.is_empty() {
        return None;
    }
    let quats: Vec<Vector4<T>> = rotations.iter().map(quat_of).collect();
    let mut m = Matrix4::zeros();
    for q in &quats {
        m += q * q.transpose();
    }
    let eig = SymmetricEigen::new(m);
    let top = eig.eigenvalues.imax();
    let mut reference: Vector4<T> = eig.eigenvectors.column(top).into_owned();
    // Fix the eigenvector sign so the result is reproducible.
    if reference[0] < T::zero() {
        reference = -reference;
    }
    let mut acc = Vector4::zeros();
    for q in &quats {
        if q.dot(&reference) < T::zero() {
            acc -= q;
        } else {
            acc += q;
        }
    }
    let n = acc.norm();
    if n <= T::zero() {
        return None;
    }
    let acc = acc / n;
    let uq = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(acc[0], acc[1], acc[2], acc[3]));
    Some(uq.to_rotation_matrix().into_inner())
}

/// Whether `r` is orthonormal with determinant +1 within `tol`.
pub fn is_rotation<T: Real>(r: &Matrix3<T>, tol: T) -> bool {
    let e = r.transpose() * r - Matrix3::identity();
    e.iter().all(|v| v.abs() <= tol) && (r.determinant() - T::one()).abs() <= tol
}
