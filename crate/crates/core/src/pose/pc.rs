//! Principal-component structure systems of voxel sets.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::BinaryMask;

/// Dot products below this magnitude count as ties in sign canonicalization.
const SIGN_TIE_TOL: f64 = 1e-12;
/// Smallest eigenvalue below this fraction of the largest means coplanar.
const DEGENERACY_TOL: f64 = 1e-10;

/// Centroid, principal axes (columns, descending variance, det +1) and
/// eigenvalues of a point distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PcSystem<T: Real> {
    pub origin: Vector3<T>,
    pub axes: Matrix3<T>,
    pub eigenvalues: Vector3<T>,
}

impl<T: Real> PcSystem<T> {
    /// Principal axis `i` (0 = largest variance).
    pub fn axis(&self, i: usize) -> Vector3<T> {
        self.axes.column(i).into_owned()
    }
}

/// Applies the sign convention to eigenvector columns sorted by rank.
///
/// Column `i` is flipped so that its component along coordinate axis `i` is
/// non-negative; a zero component defers to the next coordinate axis. A
/// left-handed result has its third column negated.
pub fn canonicalize_axes<T: Real>(axes: &Matrix3<T>) -> Matrix3<T> {
    let tol = T::lit(SIGN_TIE_TOL);
    let mut out = *axes;
    for i in 0..3 {
        for step in 0..3 {
            let a = (i + step) % 3;
            let d = out[(a, i)];
            if d.abs() > tol {
                if d < T::zero() {
                    let neg = -out.column(i);
                    out.set_column(i, &neg);
                }
                break;
            }
        }
    }
    if out.determinant() < T::zero() {
        let neg = -out.column(2);
        out.set_column(2, &neg);
    }
    out
}

/// PC system of a point cloud (population covariance).
pub fn pc_from_points<T: Real>(points: &[Vector3<T>]) -> Result<PcSystem<T>> {
    if points.len() < 4 {
        return Err(Error::Degenerate(format!(
            "need at least 4 points, got {}",
            points.len()
        )));
    }
    let n = T::from_usize_exact(points.len());
    let origin = points.iter().fold(Vector3::zeros(), |acc, p| acc + p) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - origin;
        cov += d * d.transpose();
    }
    cov /= n;
    pc_from_covariance(origin, cov)
}

pub(crate) fn pc_from_covariance<T: Real>(origin: Vector3<T>, cov: Matrix3<T>) -> Result<PcSystem<T>> {
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
    });
    let eigenvalues = Vector3::new(
        eig.eigenvalues[order[0]],
        eig.eigenvalues[order[1]],
        eig.eigenvalues[order[2]],
    );
    if !(eigenvalues[0] > T::zero()) || eigenvalues[2] <= eigenvalues[0] * T::lit(DEGENERACY_TOL) {
        return Err(Error::Degenerate(
            "points are coplanar or collinear".into(),
        ));
    }
    let mut axes = Matrix3::zeros();
    for (c, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src).normalize();
        axes.set_column(c, &v);
    }
    Ok(PcSystem {
        origin,
        axes: canonicalize_axes(&axes),
        eigenvalues,
    })
}

/// PC system of the physical centers of a mask's voxels.
pub fn pc_from_mask<T: Real>(mask: &BinaryMask<T>) -> Result<PcSystem<T>> {
    let pts: Vec<Vector3<T>> = mask.true_points().collect();
    pc_from_points(&pts)
}

/// PC system of the union of several object masks.
pub fn pc_from_all_objects<'a, T: Real>(
    masks: impl IntoIterator<Item = &'a BinaryMask<T>>,
) -> Result<PcSystem<T>> {
    let union = BinaryMask::union(masks)?;
    pc_from_mask(&union)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Grid, Volume};
    use approx::assert_relative_eq;

    fn box_mask(dims: [usize; 3], lo: [usize; 3], size: [usize; 3], spacing: [f64; 3]) -> BinaryMask<f64> {
        let g = Grid::new(dims, spacing).unwrap();
        let mut m = Volume::filled(g.clone(), false);
        let mut data = m.data().to_vec();
        for k in lo[2]..lo[2] + size[2] {
            for j in lo[1]..lo[1] + size[1] {
                for i in lo[0]..lo[0] + size[0] {
                    data[g.linear(i, j, k)] = true;
                }
            }
        }
        m = Volume::new(g, data).unwrap();
        m
    }

    #[test]
    fn box_axes_are_coordinate_axes() {
        let m = box_mask([30, 20, 10], [2, 3, 1], [21, 11, 5], [1.0; 3]);
        let pc = pc_from_mask(&m).unwrap();
        assert_relative_eq!(pc.origin, Vector3::new(12.0, 8.0, 3.0), epsilon = 1e-12);
        assert_relative_eq!(pc.axes, Matrix3::identity(), epsilon = 1e-12);
        // Uniform discrete box: variance (n² − 1)/12 per axis.
        assert_relative_eq!(pc.eigenvalues[0], (21.0 * 21.0 - 1.0) / 12.0, epsilon = 1e-9);
        assert_relative_eq!(pc.eigenvalues[1], (11.0 * 11.0 - 1.0) / 12.0, epsilon = 1e-9);
        assert_relative_eq!(pc.eigenvalues[2], (5.0 * 5.0 - 1.0) / 12.0, epsilon = 1e-9);
    }

    #[test]
    fn translation_moves_origin_only() {
        let s = [1.5, 1.0, 2.0];
        let a = pc_from_mask(&box_mask([40, 20, 10], [2, 3, 1], [21, 11, 5], s)).unwrap();
        let b = pc_from_mask(&box_mask([40, 20, 10], [12, 3, 1], [21, 11, 5], s)).unwrap();
        assert_relative_eq!(b.origin - a.origin, Vector3::new(15.0, 0.0, 0.0), epsilon = 1e-9);
        assert_relative_eq!(a.axes, b.axes, epsilon = 1e-12);
    }

    #[test]
    fn axis_swap_moves_first_axis_to_y() {
        let a = pc_from_mask(&box_mask([30, 30, 10], [2, 3, 1], [21, 11, 5], [1.0; 3])).unwrap();
        let b = pc_from_mask(&box_mask([30, 30, 10], [3, 2, 1], [11, 21, 5], [1.0; 3])).unwrap();
        assert_relative_eq!(b.axis(0), Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(b.axis(1), Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(b.axis(2), Vector3::new(0.0, 0.0, -1.0), epsilon = 1e-12);
        assert_relative_eq!(a.eigenvalues, b.eigenvalues, epsilon = 1e-9);
        assert_relative_eq!(b.axes.determinant(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_sets_rejected() {
        let flat = box_mask([10, 10, 10], [1, 1, 4], [5, 5, 1], [1.0; 3]);
        assert!(matches!(pc_from_mask(&flat), Err(Error::Degenerate(_))));
        let line = box_mask([10, 10, 10], [1, 1, 1], [8, 1, 1], [1.0; 3]);
        assert!(pc_from_mask(&line).is_err());
        let empty = box_mask([4, 4, 4], [0, 0, 0], [0, 0, 0], [1.0; 3]);
        assert!(pc_from_mask(&empty).is_err());
    }

    #[test]
    fn union_of_single_object_matches() {
        let m = box_mask([30, 20, 10], [2, 3, 1], [21, 11, 5], [1.0; 3]);
        assert_eq!(pc_from_all_objects([&m]).unwrap(), pc_from_mask(&m).unwrap());
    }

    #[test]
    fn union_covariance_total_law() {
        let a = box_mask([40, 30, 20], [2, 2, 2], [9, 5, 4], [1.0; 3]);
        let b = box_mask([40, 30, 20], [20, 15, 9], [6, 7, 8], [1.0; 3]);
        let u = pc_from_all_objects([&a, &b]).unwrap();
        let cov_u = u.axes * Matrix3::from_diagonal(&u.eigenvalues) * u.axes.transpose();
        let stats = |m: &BinaryMask<f64>| {
            let pts: Vec<_> = m.true_points().collect();
            let n = pts.len() as f64;
            let mean = pts.iter().fold(Vector3::zeros(), |a, p| a + p) / n;
            let cov = pts.iter().fold(Matrix3::zeros(), |a, p| a + (p - mean) * (p - mean).transpose()) / n;
            (n, mean, cov)
        };
        let (na, ma, ca) = stats(&a);
        let (nb, mb, cb) = stats(&b);
        let n = na + nb;
        let mean = (ma * na + mb * nb) / n;
        let within = (ca * na + cb * nb) / n;
        let between = ((ma - mean) * (ma - mean).transpose() * na + (mb - mean) * (mb - mean).transpose() * nb) / n;
        assert_relative_eq!(u.origin, mean, epsilon = 1e-10);
        assert_relative_eq!(cov_u, within + between, epsilon = 1e-8);
    }

    #[test]
    fn symmetric_objects_center_at_midpoint() {
        let a = box_mask([21, 21, 21], [2, 2, 2], [4, 3, 5], [1.0; 3]);
        let b = box_mask([21, 21, 21], [15, 16, 14], [4, 3, 5], [1.0; 3]);
        let u = pc_from_all_objects([&a, &b]).unwrap();
        assert_relative_eq!(u.origin, Vector3::new(10.0, 10.0, 10.0), epsilon = 1e-12);
    }
}
