//! Per-object point distribution models.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigenvalues below this relative size are treated as zero.
const MODE_TOL: f64 = 1e-12;

/// How an object occupies space when voxelized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    /// The landmark surface bounds a filled region.
    #[default]
    Solid,
    /// Only a thin band around the lateral surface (e.g. skin).
    Shell,
}

/// Mean landmark shape plus its eigenmodes of variation.
///
/// Landmarks are stored slice by slice, `points_per_slice` per slice.
/// Every mode with non-zero variance is kept, so the covariance is
/// recoverable exactly; `retained` counts the leading modes covering the
/// configured variance fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectModel<T: Real> {
    pub label: String,
    pub kind: ObjectKind,
    pub points_per_slice: usize,
    pub slices: usize,
    pub mean: DVector<T>,
    pub eigenvalues: Vec<T>,
    /// One unit column per eigenvalue.
    pub eigenvectors: DMatrix<T>,
    pub retained: usize,
}

pub fn flatten<T: Real>(shape: &[Vector3<T>]) -> DVector<T> {
    DVector::from_iterator(3 * shape.len(), shape.iter().flat_map(|p| [p.x, p.y, p.z]))
}

pub fn unflatten<T: Real>(v: &DVector<T>) -> Vec<Vector3<T>> {
    v.as_slice()
        .chunks_exact(3)
        .map(|c| Vector3::new(c[0], c[1], c[2]))
        .collect()
}

impl<T: Real> ObjectModel<T> {
    pub fn landmark_count(&self) -> usize {
        self.mean.len() / 3
    }

    pub fn mean_shape(&self) -> Vec<Vector3<T>> {
        unflatten(&self.mean)
    }

    /// Dense covariance `Σ λ_j u_j u_jᵀ`.
    pub fn covariance(&self) -> DMatrix<T> {
        let d = DMatrix::from_diagonal(&DVector::from_vec(self.eigenvalues.clone()));
        &self.eigenvectors * d * self.eigenvectors.transpose()
    }

    /// Mode coefficients of a shape.
    pub fn project(&self, shape: &[Vector3<T>]) -> Result<DVector<T>> {
        let x = flatten(shape);
        if x.len() != self.mean.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} landmarks, model has {}",
                shape.len(),
                self.landmark_count()
            )));
        }
        Ok(self.eigenvectors.transpose() * (x - &self.mean))
    }

    /// `mean + Σ b_j u_j` over the first `b.len()` modes.
    pub fn reconstruct(&self, b: &[T]) -> Vec<Vector3<T>> {
        let mut x = self.mean.clone();
        for (j, &bj) in b.iter().enumerate().take(self.eigenvectors.ncols()) {
            x += self.eigenvectors.column(j) * bj;
        }
        unflatten(&x)
    }
}

/// Mean and sample-covariance eigenmodes of aligned shapes.
///
/// Eigenmodes come from the `N×N` Gram matrix, so cost is independent of
/// the landmark count. A single shape yields a model with no modes.
pub fn build_object_model<T: Real>(
    label: &str,
    kind: ObjectKind,
    points_per_slice: usize,
    shapes: &[Vec<Vector3<T>>],
    variance_retained: f64,
) -> Result<ObjectModel<T>> {
    let Some(first) = shapes.first() else {
        return Err(Error::param("shapes", "no training shapes"));
    };
    let n = first.len();
    if n == 0 || points_per_slice == 0 || n % points_per_slice != 0 {
        return Err(Error::ShapeMismatch(format!(
            "{n} landmarks do not split into slices of {points_per_slice}"
        )));
    }
    if let Some(bad) = shapes.iter().position(|s| s.len() != n) {
        return Err(Error::ShapeMismatch(format!("shape {bad} has {} landmarks, expected {n}", shapes[bad].len())));
    }
    let count = shapes.len();
    let cols: Vec<DVector<T>> = shapes.iter().map(|s| flatten(s)).collect();
    let mean = cols.iter().fold(DVector::zeros(3 * n), |a, c| a + c) / T::from_usize_exact(count);
    let x = DMatrix::from_columns(&cols.iter().map(|c| c - &mean).collect::<Vec<_>>());

    let mut eigenvalues = Vec::new();
    let mut vectors = Vec::new();
    if count > 1 {
        let dof = T::from_usize_exact(count - 1);
        let gram = x.transpose() * &x / dof;
        let eig = gram.symmetric_eigen();
        let mut order: Vec<usize> = (0..count).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).expect("finite"));
        // Relative to both the leading variance and the coordinate scale, so
        // round-off on identical shapes is not mistaken for a mode.
        let coord_scale = mean.norm_squared() / T::from_usize_exact(3 * n);
        let floor = eig.eigenvalues[order[0]].max(coord_scale) * T::lit(MODE_TOL);
        for &j in &order {
            let lambda = eig.eigenvalues[j];
            if !(lambda > floor) {
                continue;
            }
            let u = &x * eig.eigenvectors.column(j);
            let norm = u.norm();
            if norm > T::zero() {
                eigenvalues.push(lambda);
                vectors.push(u / norm);
            }
        }
    }
    let total = eigenvalues.iter().fold(T::zero(), |a, &b| a + b);
    let goal = total * T::lit(variance_retained);
    let mut retained = 0;
    let mut acc = T::zero();
    while retained < eigenvalues.len() && acc < goal {
        acc += eigenvalues[retained];
        retained += 1;
    }
    let eigenvectors = if vectors.is_empty() {
        DMatrix::zeros(3 * n, 0)
    } else {
        DMatrix::from_columns(&vectors)
    };
    Ok(ObjectModel {
        label: label.to_string(),
        kind,
        points_per_slice,
        slices: n / points_per_slice,
        mean,
        eigenvalues,
        eigenvectors,
        retained,
    })
}
