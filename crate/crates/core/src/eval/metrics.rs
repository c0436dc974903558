//! Recognition error measures.

use nalgebra::{Matrix3, Vector3};

use crate::pose::euler_xyz;
use crate::scalar::Real;

/// Euclidean distance in mm.
pub fn translation_error<T: Real>(predicted: &Vector3<T>, truth: &Vector3<T>) -> T {
    (predicted - truth).norm()
}

/// Absolute heading (x), attitude (y) and bank (z) of `R_pred·R_trueᵀ`,
/// in degrees, plus whether the attitude sits at the gimbal lock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationError<T> {
    pub degrees: [T; 3],
    pub gimbal: bool,
}

pub fn orientation_error<T: Real>(predicted: &Matrix3<T>, truth: &Matrix3<T>) -> OrientationError<T> {
    let e = euler_xyz(&(predicted * truth.transpose()));
    OrientationError {
        degrees: e.to_degrees().map(|a| a.abs()),
        gimbal: e.near_gimbal_lock(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::{rot_x, rot_y, rot_z};
    use approx::assert_relative_eq;

    #[test]
    fn translation_three_four_five() {
        let a = Vector3::new(1.0, 2.0, 3.0);
        let b = a + Vector3::new(3.0, 4.0, 0.0);
        assert_eq!(translation_error(&a, &a), 0.0);
        assert_relative_eq!(translation_error(&a, &b), 5.0);
        assert_eq!(translation_error(&a, &b), translation_error(&b, &a));
    }

    #[test]
    fn orientation_cases() {
        let truth = rot_y(0.4) * rot_x(-0.2);
        let e = orientation_error(&truth, &truth);
        assert!(e.degrees.iter().all(|a: &f64| a.abs() < 1e-12));
        let p = rot_z(7f64.to_radians()) * truth;
        let e = orientation_error(&p, &truth);
        assert_relative_eq!(e.degrees[0], 0.0, epsilon = 1e-9);
        assert_relative_eq!(e.degrees[1], 0.0, epsilon = 1e-9);
        assert_relative_eq!(e.degrees[2], 7.0, epsilon = 1e-9);
        assert!(!e.gimbal);
    }

    #[test]
    fn small_right_rotation_about_x() {
        let r = rot_z(0.3) * rot_y(-0.1);
        let theta = 0.5f64;
        let e = orientation_error(&r, &(r * rot_x(theta.to_radians())));
        // R·Rx(−θ)·Rᵀ turns by θ about R·x, so only the total angle is fixed.
        let total = (e.degrees[0].powi(2) + e.degrees[1].powi(2) + e.degrees[2].powi(2)).sqrt();
        assert_relative_eq!(total, theta, epsilon = 1e-3);
        let r = rot_x(0.3);
        let e = orientation_error(&r, &(r * rot_x(theta.to_radians())));
        assert_relative_eq!(e.degrees[0], theta, epsilon = 1e-9);
        assert_relative_eq!(e.degrees[1], 0.0, epsilon = 1e-9);
        assert_relative_eq!(e.degrees[2], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn gimbal_is_flagged() {
        let e = orientation_error(&rot_y(90f64.to_radians()), &Matrix3::identity());
        assert!(e.gimbal);
    }
}
