//! Voxel grids with physical spacing.
//!
//! Data is stored flat with x varying fastest, then y, then z. Physical
//! coordinates are anchored at voxel centers with index `(0, 0, 0)` at the
//! origin, so voxel `(i, j, k)` sits at `(i·νx, j·νy, k·νz)` mm.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Integer voxel coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelIndex {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl VoxelIndex {
    pub const fn new(i: usize, j: usize, k: usize) -> Self {
        Self { i, j, k }
    }
}

/// Physical position (mm) of a voxel center.
pub fn physical_point<T: Real>(index: VoxelIndex, spacing: &[T; 3]) -> Vector3<T> {
    Vector3::new(
        T::from_usize_exact(index.i) * spacing[0],
        T::from_usize_exact(index.j) * spacing[1],
        T::from_usize_exact(index.k) * spacing[2],
    )
}

/// Shape and spacing of a voxel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    dims: [usize; 3],
    spacing: [T; 3],
}

impl<T: Real> Grid<T> {
    pub fn new(dims: [usize; 3], spacing: [T; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidGrid(format!("dims must be positive, got {dims:?}")));
        }
        if dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).is_none() {
            return Err(Error::InvalidGrid("voxel count overflows".into()));
        }
        if spacing.iter().any(|&s| !(s.is_finite_value() && s > T::zero())) {
            return Err(Error::InvalidGrid(
                "spacing components must be finite and strictly positive".into(),
            ));
        }
        Ok(Self { dims, spacing })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [T; 3] {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn linear(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn index_of(&self, linear: usize) -> VoxelIndex {
        let nx = self.dims[0];
        let ny = self.dims[1];
        VoxelIndex::new(linear % nx, (linear / nx) % ny, linear / (nx * ny))
    }

    /// Linear index of a signed coordinate, or `None` outside the domain.
    #[inline]
    pub fn checked_linear(&self, i: i64, j: i64, k: i64) -> Option<usize> {
        let [nx, ny, nz] = self.dims;
        if i < 0 || j < 0 || k < 0 || i >= nx as i64 || j >= ny as i64 || k >= nz as i64 {
            return None;
        }
        Some(self.linear(i as usize, j as usize, k as usize))
    }

    pub fn contains(&self, index: VoxelIndex) -> bool {
        index.i < self.dims[0] && index.j < self.dims[1] && index.k < self.dims[2]
    }

    pub fn point(&self, index: VoxelIndex) -> Vector3<T> {
        physical_point(index, &self.spacing)
    }

    pub fn point_linear(&self, linear: usize) -> Vector3<T> {
        self.point(self.index_of(linear))
    }

    /// Nearest voxel to a physical point, `None` when it falls outside.
    pub fn nearest_voxel(&self, p: &Vector3<T>) -> Option<VoxelIndex> {
        let mut idx = [0i64; 3];
        for a in 0..3 {
            let v = (p[a] / self.spacing[a]).round().as_f64();
            if !v.is_finite() {
                return None;
            }
            idx[a] = v as i64;
        }
        self.checked_linear(idx[0], idx[1], idx[2])
            .map(|l| self.index_of(l))
    }

    pub fn cast<U: Real>(&self) -> Grid<U> {
        Grid {
            dims: self.dims,
            spacing: self.spacing.map(|s| U::lit(s.as_f64())),
        }
    }
}

/// A grid together with one value per voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<V, T> {
    grid: Grid<T>,
    data: Vec<V>,
}

/// Scalar scene `(C, f)`: non-negative intensities on a grid.
pub type Scene<T> = Volume<T, T>;
/// Boolean object or threshold mask.
pub type BinaryMask<T> = Volume<bool, T>;
/// Per-voxel ball radius `r(c)`.
pub type BScaleScene<T> = Volume<u16, T>;
/// Per-voxel intensity-weighted radius `r'(c) = f(c)·r(c)`.
pub type WbsScene<T> = Volume<T, T>;

impl<V, T: Real> Volume<V, T> {
    pub fn new(grid: Grid<T>, data: Vec<V>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: data.len(),
            });
        }
        Ok(Self { grid, data })
    }

    pub fn filled(grid: Grid<T>, value: V) -> Self
    where
        V: Clone,
    {
        let data = vec![value; grid.len()];
        Self { grid, data }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims
    }

    pub fn spacing(&self) -> [T; 3] {
        self.grid.spacing
    }

    pub fn data(&self) -> &[V] {
        &self.data
    }

    pub fn into_data(self) -> Vec<V> {
        self.data
    }

    #[inline]
    pub fn get(&self, index: VoxelIndex) -> &V {
        &self.data[self.grid.linear(index.i, index.j, index.k)]
    }

    pub fn map<W>(&self, f: impl Fn(&V) -> W) -> Volume<W, T> {
        Volume {
            grid: self.grid.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Real> Volume<T, T> {
    /// Builds a scene, enforcing `f(c) ≥ 0` everywhere.
    pub fn scene(grid: Grid<T>, data: Vec<T>) -> Result<Self> {
        if let Some(index) = data
            .iter()
            .position(|&v| !(v.is_finite_value() && v >= T::zero()))
        {
            return Err(Error::NegativeIntensity { index });
        }
        Self::new(grid, data)
    }

    pub fn max_value(&self) -> T {
        self.data.iter().copied().fold(T::zero(), T::max)
    }
}

impl<T: Real> Volume<bool, T> {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Linear indices of set voxels, ascending.
    pub fn true_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    /// Physical centers of set voxels in ascending linear order.
    pub fn true_points(&self) -> impl Iterator<Item = Vector3<T>> + '_ {
        self.true_indices().map(|l| self.grid.point_linear(l))
    }

    /// Voxel-wise union of masks sharing one grid.
    pub fn union<'a>(masks: impl IntoIterator<Item = &'a Self>) -> Result<Self> {
        let mut iter = masks.into_iter();
        let first = iter.next().ok_or(Error::EmptyMask)?;
        let mut out = first.clone();
        for m in iter {
            if m.grid.dims != out.grid.dims {
                return Err(Error::InvalidGrid("mask dims differ in union".into()));
            }
            for (o, &v) in out.data.iter_mut().zip(&m.data) {
                *o |= v;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn physical_point_examples() {
        let s = [1.17, 1.17, 1.17];
        assert_eq!(physical_point(VoxelIndex::new(0, 0, 0), &s), Vector3::zeros());
        let p = physical_point(VoxelIndex::new(2, 0, 0), &s);
        assert_relative_eq!(p.x, 2.34, epsilon = 1e-12);
        let p = physical_point(VoxelIndex::new(1, 2, 3), &[2.0, 1.0, 0.5]);
        assert_eq!(p, Vector3::new(2.0, 2.0, 1.5));
    }

    #[test]
    fn physical_point_is_linear_in_index() {
        let s = [0.7f64, 1.3, 2.1];
        let a = physical_point(VoxelIndex::new(3, 4, 5), &s);
        let b = physical_point(VoxelIndex::new(6, 8, 10), &s);
        assert_relative_eq!(b, a * 2.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_rejects_bad_inputs() {
        assert!(Grid::new([0, 1, 1], [1.0, 1.0, 1.0]).is_err());
        assert!(Grid::new([1, 1, 1], [1.0, 0.0, 1.0]).is_err());
        assert!(Grid::new([1, 1, 1], [1.0, -2.0, 1.0]).is_err());
    }

    #[test]
    fn scene_invariants() {
        let g = Grid::new([2, 2, 2], [1.0f64; 3]).unwrap();
        assert!(Scene::scene(g.clone(), vec![0.0; 8]).is_ok());
        assert!(matches!(
            Scene::scene(g.clone(), vec![0.0; 7]),
            Err(Error::LengthMismatch { expected: 8, found: 7 })
        ));
        let mut d = vec![1.0; 8];
        d[3] = -1.0;
        assert!(matches!(
            Scene::scene(g, d),
            Err(Error::NegativeIntensity { index: 3 })
        ));
    }

    #[test]
    fn linear_index_roundtrip() {
        let g = Grid::new([3, 4, 5], [1.0f32; 3]).unwrap();
        for l in 0..g.len() {
            let v = g.index_of(l);
            assert_eq!(g.linear(v.i, v.j, v.k), l);
        }
        assert_eq!(g.linear(1, 0, 0), 1);
        assert_eq!(g.linear(0, 1, 0), 3);
        assert_eq!(g.linear(0, 0, 1), 12);
    }
}
