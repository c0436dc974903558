//! Scale feature: diagonal of the axis-aligned box enclosing a structure.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::BinaryMask;

/// Corner-to-corner length of the tight axis-aligned box around points.
pub fn aabb_diagonal<T: Real>(points: impl IntoIterator<Item = Vector3<T>>) -> Option<T> {
    let mut iter = points.into_iter();
    let first = iter.next()?;
    let (lo, hi) = iter.fold((first, first), |(lo, hi), p| (lo.inf(&p), hi.sup(&p)));
    Some((hi - lo).norm())
}

/// MEB diagonal (mm) over the voxel centers of a mask.
pub fn meb_diagonal<T: Real>(mask: &BinaryMask<T>) -> Result<T> {
    aabb_diagonal(mask.true_points()).ok_or(Error::EmptyMask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Grid, Volume};

    #[test]
    fn box_diagonal() {
        // Voxel centers spanning 20 x 10 x 5 mm.
        let g = Grid::new([25, 15, 8], [1.0f64; 3]).unwrap();
        let mut d = vec![false; g.len()];
        for k in 1..=6 {
            for j in 2..=12 {
                for i in 0..=20 {
                    d[g.linear(i, j, k)] = true;
                }
            }
        }
        let m = Volume::new(g, d).unwrap();
        assert!((meb_diagonal(&m).unwrap() - 525f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_voxel_and_empty() {
        let g = Grid::new([3, 3, 3], [1.0f64; 3]).unwrap();
        let mut d = vec![false; 27];
        assert!(matches!(meb_diagonal(&Volume::new(g.clone(), d.clone()).unwrap()), Err(Error::EmptyMask)));
        d[13] = true;
        assert_eq!(meb_diagonal(&Volume::new(g, d).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn permutation_invariant() {
        let pts = vec![Vector3::new(0.0, 0.0, 0.0), Vector3::new(3.0, 7.0, 2.0)];
        let swapped: Vec<_> = pts.iter().map(|p| Vector3::new(p.y, p.x, p.z)).collect();
        assert_eq!(aabb_diagonal(pts), aabb_diagonal(swapped));
    }
}
