//! Intensity-weighted object scale estimation.
//!
//! For every voxel `c` the ball radius grows from 1 while the fraction of
//! the current shell that is homogeneous with `c` stays at or above `t_s`;
//! the radius is the last `k` that passed, and the weighted value is
//! `r'(c) = f(c)·r(c)`. Shell members outside the scene domain are left out
//! of both the sum and the count. An empty in-domain shell ends the growth.

use rayon::prelude::*;

use super::homogeneity::{homogeneity_weight, HomogeneityParams};
use super::shell::ShellTable;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::{BScaleScene, Scene, Volume, VoxelIndex, WbsScene};

/// Largest intensity for which weights are tabulated by integer difference.
const WEIGHT_TABLE_LIMIT: f64 = 1_048_576.0;

/// Per-pair weight evaluation over a scene padded by the largest shell
/// extent, so shell members never need 3D bounds checks.
///
/// Integer-valued scenes use a table indexed by `|f(c) − f(e)|`; every
/// entry is produced by [`homogeneity_weight`] on the same difference, so
/// both branches give bit-identical weights. Padding holds a sentinel
/// (`u32::MAX` or infinity) that marks out-of-domain members.
enum Weights<T> {
    Table(Vec<T>, Vec<u32>),
    Direct(T, Vec<T>),
}

impl<T: Real> Weights<T> {
    fn for_scene(scene: &Scene<T>, sigma: T, pad: &Padding) -> Self {
        let integer = scene
            .data()
            .iter()
            .all(|v| v.as_f64().fract() == 0.0 && v.as_f64() <= WEIGHT_TABLE_LIMIT);
        if integer {
            let q = pad.embed(scene.data(), u32::MAX, |v| v.as_f64() as u32);
            let n = scene.data().iter().map(|v| v.as_f64() as usize).max().unwrap_or(0) + 1;
            let table = (0..n)
                .map(|d| homogeneity_weight(T::from_usize_exact(d), sigma))
                .collect();
            Weights::Table(table, q)
        } else {
            Weights::Direct(sigma, pad.embed(scene.data(), T::infinity(), |v| v))
        }
    }

    /// Weight sum and in-domain count over `offsets` around padded index `c`.
    /// With `interior` set every member is known to be in the domain.
    #[inline(always)]
    fn shell_sum(&self, c: usize, offsets: &[isize], interior: bool) -> (T, usize) {
        let mut sum = T::zero();
        let mut count = 0usize;
        match self {
            Weights::Table(table, q) => {
                let qc = q[c];
                if interior {
                    for &o in offsets {
                        sum += table[q[(c as isize + o) as usize].abs_diff(qc) as usize];
                    }
                    count = offsets.len();
                } else {
                    for &o in offsets {
                        let v = q[(c as isize + o) as usize];
                        if v != u32::MAX {
                            sum += table[v.abs_diff(qc) as usize];
                            count += 1;
                        }
                    }
                }
            }
            Weights::Direct(sigma, f) => {
                let fc = f[c];
                for &o in offsets {
                    let v = f[(c as isize + o) as usize];
                    if v.is_finite_value() {
                        sum += homogeneity_weight((fc - v).abs(), *sigma);
                        count += 1;
                    }
                }
            }
        }
        (sum, count)
    }
}

/// Geometry of the padded copy of a scene.
struct Padding {
    dims: [usize; 3],
    pad: [usize; 3],
    padded: [usize; 3],
}

impl Padding {
    fn new(dims: [usize; 3], table: &ShellTable) -> Self {
        let ext = table.extent(table.k_max());
        let pad = [0, 1, 2].map(|a| ext[a] as usize);
        Self {
            dims,
            pad,
            padded: [0, 1, 2].map(|a| dims[a] + 2 * pad[a]),
        }
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let [px, py, pz] = self.pad;
        let [nx, ny, _] = self.padded;
        (i + px) + nx * ((j + py) + ny * (k + pz))
    }

    fn offset(&self, o: &[i32; 3]) -> isize {
        let [nx, ny, _] = self.padded;
        o[0] as isize + nx as isize * (o[1] as isize + ny as isize * o[2] as isize)
    }

    fn embed<V: Copy, W: Copy>(&self, data: &[V], fill: W, f: impl Fn(V) -> W) -> Vec<W> {
        let [nx, ny, nz] = self.dims;
        let mut out = vec![fill; self.padded.iter().product()];
        for k in 0..nz {
            for j in 0..ny {
                let src = nx * (j + ny * k);
                let dst = self.index(0, j, k);
                for i in 0..nx {
                    out[dst + i] = f(data[src + i]);
                }
            }
        }
        out
    }
}

/// Shell offsets linearized for the padded grid.
struct Kernel<'a, T> {
    table: &'a ShellTable,
    pad: Padding,
    linear: Vec<Vec<isize>>,
    dims: [i64; 3],
    weights: Weights<T>,
    ts: T,
}

impl<'a, T: Real> Kernel<'a, T> {
    fn new(scene: &Scene<T>, table: &'a ShellTable, params: &HomogeneityParams<T>) -> Self {
        let pad = Padding::new(scene.dims(), table);
        let linear = (0..=table.k_max())
            .map(|k| table.shell(k).iter().map(|o| pad.offset(o)).collect())
            .collect();
        let d = scene.dims();
        let weights = Weights::for_scene(scene, params.sigma(), &pad);
        Self {
            table,
            pad,
            linear,
            dims: [d[0] as i64, d[1] as i64, d[2] as i64],
            weights,
            ts: params.ts(),
        }
    }

    fn fraction(&self, c: [i64; 3], k: usize) -> Option<T> {
        let ext = self.table.extent(k);
        let interior = (0..3).all(|a| c[a] - ext[a] >= 0 && c[a] + ext[a] < self.dims[a]);
        let p = self.pad.index(c[0] as usize, c[1] as usize, c[2] as usize);
        let (sum, count) = self.weights.shell_sum(p, &self.linear[k], interior);
        (count > 0).then(|| sum / T::from_usize_exact(count))
    }

    fn radius(&self, c: [i64; 3]) -> usize {
        for k in 1..=self.table.k_max() {
            match self.fraction(c, k) {
                Some(fo) if fo >= self.ts => {}
                _ => return k - 1,
            }
        }
        self.table.k_max()
    }
}

fn check_table<T: Real>(scene: &Scene<T>, table: &ShellTable) -> Result<()> {
    let s = scene.spacing().map(Real::as_f64);
    if s != table.spacing() {
        return Err(Error::param(
            "table",
            format!("shell table spacing {:?} differs from scene spacing {s:?}", table.spacing()),
        ));
    }
    Ok(())
}

fn coords(c: VoxelIndex) -> [i64; 3] {
    [c.i as i64, c.j as i64, c.k as i64]
}

/// Fraction of shell `k` around `c` that is homogeneous with `c`, or `None`
/// when no shell member lies inside the domain.
pub fn fraction_of_object<T: Real>(
    scene: &Scene<T>,
    c: VoxelIndex,
    k: usize,
    table: &ShellTable,
    params: &HomogeneityParams<T>,
) -> Result<Option<T>> {
    check_table(scene, table)?;
    if k == 0 || k > table.k_max() {
        return Err(Error::param("k", format!("must lie in 1..={}", table.k_max())));
    }
    if !scene.grid().contains(c) {
        return Err(Error::param("c", format!("{c:?} outside the scene")));
    }
    let kernel = Kernel::new(scene, table, params);
    Ok(kernel.fraction(coords(c), k))
}

/// Ball scale `r(c)` at a single voxel.
pub fn bscale_at<T: Real>(
    scene: &Scene<T>,
    c: VoxelIndex,
    table: &ShellTable,
    params: &HomogeneityParams<T>,
) -> Result<usize> {
    check_table(scene, table)?;
    if !scene.grid().contains(c) {
        return Err(Error::param("c", format!("{c:?} outside the scene")));
    }
    let kernel = Kernel::new(scene, table, params);
    Ok(kernel.radius(coords(c)))
}

/// Ball scale and intensity-weighted ball scale of a whole scene.
///
/// Rows are processed in parallel on the current rayon pool; each output
/// voxel depends only on the immutable input, so the result does not
/// depend on the schedule.
pub fn compute_wbs<T: Real>(
    scene: &Scene<T>,
    params: &HomogeneityParams<T>,
    k_max: usize,
) -> Result<(BScaleScene<T>, WbsScene<T>)> {
    let table = ShellTable::build(scene.spacing(), k_max)?;
    compute_wbs_with_table(scene, params, &table)
}

pub fn compute_wbs_with_table<T: Real>(
    scene: &Scene<T>,
    params: &HomogeneityParams<T>,
    table: &ShellTable,
) -> Result<(BScaleScene<T>, WbsScene<T>)> {
    let (radii, wbs) = run(scene, params, table, false)?;
    let grid = scene.grid().clone();
    Ok((Volume::new(grid, radii)?, wbs))
}

/// Weighted ball scale only. Zero-intensity voxels have `r' = 0` whatever
/// their radius, so their radius is never computed; every other voxel is
/// bit-identical to [`compute_wbs`].
pub fn compute_weighted<T: Real>(scene: &Scene<T>, params: &HomogeneityParams<T>, k_max: usize) -> Result<WbsScene<T>> {
    let table = ShellTable::build(scene.spacing(), k_max)?;
    Ok(run(scene, params, &table, true)?.1)
}

fn run<T: Real>(
    scene: &Scene<T>,
    params: &HomogeneityParams<T>,
    table: &ShellTable,
    skip_zero: bool,
) -> Result<(Vec<u16>, WbsScene<T>)> {
    check_table(scene, table)?;
    let kernel = Kernel::new(scene, table, params);
    let [nx, ny, _] = scene.dims();
    let data = scene.data();
    let n = data.len();
    let mut radii = vec![0u16; n];
    let mut weighted = vec![T::zero(); n];
    radii
        .par_chunks_mut(nx)
        .zip(weighted.par_chunks_mut(nx))
        .enumerate()
        .for_each(|(row, (r_row, w_row))| {
            let j = (row % ny) as i64;
            let k = (row / ny) as i64;
            let base = row * nx;
            for i in 0..nx {
                let f = data[base + i];
                if skip_zero && f == T::zero() {
                    continue;
                }
                let r = kernel.radius([i as i64, j, k]);
                r_row[i] = r as u16;
                w_row[i] = f * T::from_usize_exact(r);
            }
        });
    Ok((radii, Volume::new(scene.grid().clone(), weighted)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Grid;

    fn scene_from(dims: [usize; 3], f: impl Fn(usize, usize, usize) -> f64) -> Scene<f64> {
        let g = Grid::new(dims, [1.0; 3]).unwrap();
        let mut d = Vec::with_capacity(g.len());
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    d.push(f(i, j, k));
                }
            }
        }
        Scene::scene(g, d).unwrap()
    }

    fn params(sigma: f64) -> HomogeneityParams<f64> {
        HomogeneityParams::new(sigma, 0.85).unwrap()
    }

    #[test]
    fn constant_scene_has_unit_fraction() {
        let s = scene_from([9, 9, 9], |_, _, _| 42.0);
        let t = ShellTable::build([1.0; 3], 6).unwrap();
        for k in 1..=6 {
            for c in [VoxelIndex::new(4, 4, 4), VoxelIndex::new(0, 0, 0), VoxelIndex::new(8, 3, 1)] {
                assert_eq!(fraction_of_object(&s, c, k, &t, &params(1.0)).unwrap(), Some(1.0));
            }
        }
    }

    #[test]
    fn flat_face_half_split() {
        // c = (2,2,2); neighbours at x=3 and y=3 and z=3 are bright, others dark.
        let s = scene_from([5, 5, 5], |i, j, k| {
            if (i, j, k) == (2, 2, 2) {
                10.0
            } else if i == 3 && j == 2 && k == 2 || i == 2 && j == 3 && k == 2 || i == 2 && j == 2 && k == 3 {
                1000.0
            } else {
                10.0
            }
        });
        let t = ShellTable::build([1.0; 3], 2).unwrap();
        let fo = fraction_of_object(&s, VoxelIndex::new(2, 2, 2), 1, &t, &params(1.0))
            .unwrap()
            .unwrap();
        assert!((fo - 0.5).abs() < 1e-12);
        assert_eq!(bscale_at(&s, VoxelIndex::new(2, 2, 2), &t, &params(1.0)).unwrap(), 0);
    }

    #[test]
    fn all_members_different() {
        let s = scene_from([3, 3, 3], |i, j, k| if (i, j, k) == (1, 1, 1) { 0.0 } else { 500.0 });
        let t = ShellTable::build([1.0; 3], 1).unwrap();
        let fo = fraction_of_object(&s, VoxelIndex::new(1, 1, 1), 1, &t, &params(1.0))
            .unwrap()
            .unwrap();
        assert!(fo < 1e-12);
    }

    #[test]
    fn constant_scene_reaches_cap() {
        let s = scene_from([50, 50, 50], |_, _, _| 5.0);
        let t = ShellTable::build([1.0; 3], 20).unwrap();
        assert_eq!(bscale_at(&s, VoxelIndex::new(25, 25, 25), &t, &params(1.0)).unwrap(), 20);
    }

    #[test]
    fn single_voxel_scene_exhausts_shell() {
        let s = scene_from([1, 1, 1], |_, _, _| 5.0);
        let t = ShellTable::build([1.0; 3], 4).unwrap();
        assert_eq!(fraction_of_object(&s, VoxelIndex::new(0, 0, 0), 1, &t, &params(1.0)).unwrap(), None);
        let (r, w) = compute_wbs(&s, &params(1.0), 4).unwrap();
        assert_eq!(r.data(), &[0]);
        assert_eq!(w.data(), &[0.0]);
    }

    #[test]
    fn weighted_value_is_product() {
        let s = scene_from([12, 12, 12], |i, _, _| if i < 6 { 0.0 } else { 100.0 });
        let (r, w) = compute_wbs(&s, &params(1.0), 8).unwrap();
        for (l, (&ri, &wi)) in r.data().iter().zip(w.data()).enumerate() {
            assert_eq!(wi, s.data()[l] * ri as f64);
            if s.data()[l] == 0.0 {
                assert_eq!(wi, 0.0);
            }
        }
        // f = 100 with r = 5 gives 500 somewhere in the bright half.
        let hit = r.data().iter().zip(w.data()).any(|(&ri, &wi)| ri == 5 && wi == 500.0);
        assert!(hit);
    }

    #[test]
    fn weighted_only_matches_full_run() {
        let s = scene_from([14, 12, 10], |i, j, k| if (i + j) % 9 < 3 || k < 2 { 0.0 } else { (40 + (i * j + k) % 5) as f64 });
        let p = params(2.0);
        let (_, full) = compute_wbs(&s, &p, 6).unwrap();
        let only = compute_weighted(&s, &p, 6).unwrap();
        assert_eq!(full.data(), only.data());
    }

    #[test]
    fn table_and_direct_weights_agree_bitwise() {
        let s = scene_from([10, 10, 10], |i, j, k| ((i * 7 + j * 3 + k * 11) % 13) as f64);
        let p = params(2.5);
        let t = ShellTable::build([1.0; 3], 3).unwrap();
        let pad = Padding::new(s.dims(), &t);
        let table = Weights::for_scene(&s, p.sigma(), &pad);
        assert!(matches!(table, Weights::Table(..)));
        let direct = Weights::Direct(p.sigma(), pad.embed(s.data(), f64::INFINITY, |v| v));
        for k in 1..=3 {
            let offs: Vec<isize> = t.shell(k).iter().map(|o| pad.offset(o)).collect();
            for c in [pad.index(0, 0, 0), pad.index(4, 5, 6), pad.index(9, 9, 9)] {
                let (a, n) = table.shell_sum(c, &offs, false);
                let (b, m) = direct.shell_sum(c, &offs, false);
                assert_eq!((a.to_bits(), n), (b.to_bits(), m));
            }
        }
    }

    #[test]
    fn radius_grows_away_from_flat_edge() {
        let s = scene_from([40, 8, 8], |i, _, _| if i < 20 { 100.0 } else { 900.0 });
        let t = ShellTable::build([1.0; 3], 26).unwrap();
        let p = params(1.0);
        let mut prev = 0;
        for i in 20..30 {
            let r = bscale_at(&s, VoxelIndex::new(i, 4, 4), &t, &p).unwrap();
            assert!(r >= prev, "i={i} r={r} prev={prev}");
            prev = r;
        }
        assert_eq!(bscale_at(&s, VoxelIndex::new(20, 4, 4), &t, &p).unwrap(), 0);
        assert_eq!(bscale_at(&s, VoxelIndex::new(19, 4, 4), &t, &p).unwrap(), 0);
    }

    #[test]
    fn mismatched_table_is_rejected() {
        let s = scene_from([4, 4, 4], |_, _, _| 1.0);
        let t = ShellTable::build([2.0; 3], 3).unwrap();
        assert!(compute_wbs_with_table(&s, &params(1.0), &t).is_err());
    }
}
