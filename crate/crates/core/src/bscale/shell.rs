//! Precomputed hyperball shells `B_k − B_{k−1}` for a given voxel spacing.

use crate::config::KMAX_HARD_CAP;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Normalized squared distance of an offset: `Σ (νᵢ eᵢ / min νⱼ)²`.
///
/// Each axis is scaled by its ratio to the finest spacing, so axes at the
/// finest spacing contribute exact integers.
#[inline]
pub fn normalized_sq_distance(spacing: &[f64; 3], offset: [i64; 3]) -> f64 {
    let min = spacing.iter().copied().fold(f64::INFINITY, f64::min);
    let mut acc = 0.0;
    for a in 0..3 {
        let x = spacing[a] / min * offset[a] as f64;
        acc += x * x;
    }
    acc
}

/// Integer offsets of every hyperball shell up to `k_max`.
///
/// Shell `k ≥ 1` holds the offsets whose normalized distance lies in
/// `(k − 1, k]`; shell 0 is the center alone. Offsets within a shell are
/// sorted in memory order: by `dz`, then `dy`, then `dx`.
#[derive(Debug, Clone)]
pub struct ShellTable {
    spacing: [f64; 3],
    k_max: usize,
    shells: Vec<Vec<[i32; 3]>>,
    extents: Vec<[i64; 3]>,
}

impl ShellTable {
    pub fn build<T: Real>(spacing: [T; 3], k_max: usize) -> Result<Self> {
        Self::build_with_cap(spacing, k_max, KMAX_HARD_CAP)
    }

    pub fn build_with_cap<T: Real>(spacing: [T; 3], k_max: usize, cap: usize) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::param("kmax", "must be at least 1"));
        }
        if k_max > cap {
            return Err(Error::KMaxTooLarge { k_max, cap });
        }
        let spacing = spacing.map(Real::as_f64);
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidGrid("spacing must be strictly positive".into()));
        }
        let min = spacing.iter().copied().fold(f64::INFINITY, f64::min);
        let reach = spacing.map(|s| ((k_max as f64) * min / s).floor() as i64 + 1);

        let mut shells = vec![Vec::new(); k_max + 1];
        for dx in -reach[0]..=reach[0] {
            for dy in -reach[1]..=reach[1] {
                for dz in -reach[2]..=reach[2] {
                    let q = normalized_sq_distance(&spacing, [dx, dy, dz]);
                    let k = shell_of(q);
                    if k <= k_max {
                        shells[k].push([dx as i32, dy as i32, dz as i32]);
                    }
                }
            }
        }
        for s in &mut shells {
            s.sort_unstable_by_key(|o| [o[2], o[1], o[0]]);
        }
        let mut extents = Vec::with_capacity(k_max + 1);
        let mut running = [0i64; 3];
        for s in &shells {
            for o in s {
                for a in 0..3 {
                    running[a] = running[a].max(o[a].unsigned_abs() as i64);
                }
            }
            extents.push(running);
        }
        Ok(Self {
            spacing,
            k_max,
            shells,
            extents,
        })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    /// Offsets of shell `k`.
    pub fn shell(&self, k: usize) -> &[[i32; 3]] {
        &self.shells[k]
    }

    /// Per-axis maximum `|offset|` over the full ball `B_k`.
    pub fn extent(&self, k: usize) -> [i64; 3] {
        self.extents[k]
    }

    /// Number of offsets in the full ball `B_k` (center included).
    pub fn ball_len(&self, k: usize) -> usize {
        self.shells[..=k].iter().map(Vec::len).sum()
    }
}

/// Smallest integer `k` with `q ≤ k²`, i.e. the shell index of a normalized
/// squared distance.
fn shell_of(q: f64) -> usize {
    let mut k = q.sqrt().floor() as usize;
    while ((k * k) as f64) < q {
        k += 1;
    }
    while k > 0 && (((k - 1) * (k - 1)) as f64) >= q {
        k -= 1;
    }
    k
}
