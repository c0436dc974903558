//! Slice-wise outer boundary tracing of binary masks.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::BinaryMask;

/// Axis normal to the slicing planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SliceAxis {
    X,
    Y,
    #[default]
    Z,
}

impl SliceAxis {
    /// In-plane axes `(u, v)` and normal `w`, chosen so `u × v = w`.
    fn frame(self) -> [usize; 3] {
        match self {
            SliceAxis::X => [1, 2, 0],
            SliceAxis::Y => [2, 0, 1],
            SliceAxis::Z => [0, 1, 2],
        }
    }
}

/// Closed boundary of one slice cross-section, counterclockwise when
/// viewed from the positive end of the slice axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceContour<T: Real> {
    pub slice: usize,
    pub points: Vec<Vector3<T>>,
}

// Counterclockwise 8-neighbourhood in (u, v).
const DIRS: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];
const WEST: usize = 4;

fn dir_index(du: i64, dv: i64) -> usize {
    DIRS.iter()
        .position(|&d| d == (du, dv))
        .expect("offset is an 8-neighbour")
}

struct Plane {
    nu: usize,
    nv: usize,
    data: Vec<bool>,
}

impl Plane {
    fn at(&self, u: i64, v: i64) -> bool {
        u >= 0 && v >= 0 && (u as usize) < self.nu && (v as usize) < self.nv && self.data[u as usize + self.nu * v as usize]
    }

    fn first(&self) -> Option<(i64, i64)> {
        self.data
            .iter()
            .position(|&b| b)
            .map(|l| ((l % self.nu) as i64, (l / self.nu) as i64))
    }

    fn components(&self) -> usize {
        let mut seen = vec![false; self.data.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.data.len() {
            if !self.data[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(l) = stack.pop() {
                let (u, v) = ((l % self.nu) as i64, (l / self.nu) as i64);
                for &(du, dv) in &DIRS {
                    let (a, b) = (u + du, v + dv);
                    if self.at(a, b) {
                        let m = a as usize + self.nu * b as usize;
                        if !seen[m] {
                            seen[m] = true;
                            stack.push(m);
                        }
                    }
                }
            }
        }
        count
    }

    /// Moore-neighbour trace of the outer boundary from the first raster
    /// pixel; stops when the first move repeats.
    fn trace(&self) -> Vec<(i64, i64)> {
        let Some(s) = self.first() else {
            return Vec::new();
        };
        let mut pts = vec![s];
        let (mut p, mut bd) = (s, WEST);
        let mut first_state = None;
        let cap = 4 * self.data.len() + 8;
        for _ in 0..cap {
            let mut next = None;
            for i in 1..8 {
                let d = (bd + 8 - i) % 8;
                let c = (p.0 + DIRS[d].0, p.1 + DIRS[d].1);
                if self.at(c.0, c.1) {
                    let prev = (d + 1) % 8;
                    let b = (p.0 + DIRS[prev].0, p.1 + DIRS[prev].1);
                    next = Some((c, dir_index(b.0 - c.0, b.1 - c.1)));
                    break;
                }
            }
            let Some(state) = next else { break };
            match first_state {
                Some(f) if f == state => break,
                None => first_state = Some(state),
                _ => {}
            }
            pts.push(state.0);
            p = state.0;
            bd = state.1;
        }
        if pts.len() > 1 && pts.last() == Some(&s) {
            pts.pop();
        }
        pts
    }
}

fn extract_plane<T: Real>(mask: &BinaryMask<T>, frame: [usize; 3], w: usize) -> Plane {
    let dims = mask.dims();
    let (nu, nv) = (dims[frame[0]], dims[frame[1]]);
    let g = mask.grid();
    let mut data = vec![false; nu * nv];
    for v in 0..nv {
        for u in 0..nu {
            let mut idx = [0usize; 3];
            idx[frame[0]] = u;
            idx[frame[1]] = v;
            idx[frame[2]] = w;
            data[u + nu * v] = mask.data()[g.linear(idx[0], idx[1], idx[2])];
        }
    }
    Plane { nu, nv, data }
}

/// Outer contour of one slice, or `None` when the slice is empty.
pub fn slice_contour<T: Real>(mask: &BinaryMask<T>, axis: SliceAxis, slice: usize) -> Result<Option<SliceContour<T>>> {
    let frame = axis.frame();
    if slice >= mask.dims()[frame[2]] {
        return Err(Error::param("slice", format!("index {slice} outside the mask")));
    }
    let plane = extract_plane(mask, frame, slice);
    let components = plane.components();
    if components == 0 {
        return Ok(None);
    }
    if components > 1 {
        return Err(Error::NonSimpleSlice { slice, components });
    }
    let mut trace = plane.trace();
    let area2: i64 = (0..trace.len())
        .map(|i| {
            let (a, b) = (trace[i], trace[(i + 1) % trace.len()]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum();
    if area2 < 0 {
        trace[1..].reverse();
    }
    let spacing = mask.spacing();
    let points = trace
        .into_iter()
        .map(|(u, v)| {
            let mut p = Vector3::zeros();
            p[frame[0]] = T::lit(u as f64) * spacing[frame[0]];
            p[frame[1]] = T::lit(v as f64) * spacing[frame[1]];
            p[frame[2]] = T::from_usize_exact(slice) * spacing[frame[2]];
            p
        })
        .collect();
    Ok(Some(SliceContour { slice, points }))
}

/// One contour per non-empty slice along `axis`, in slice order.
pub fn extract_slice_contours<T: Real>(mask: &BinaryMask<T>, axis: SliceAxis) -> Result<Vec<SliceContour<T>>> {
    let n = mask.dims()[axis.frame()[2]];
    let mut out = Vec::new();
    for w in 0..n {
        if let Some(c) = slice_contour(mask, axis, w)? {
            out.push(c);
        }
    }
    Ok(out)
}

/// First and last slice index along `axis` holding any set voxel.
pub fn slice_extent<T: Real>(mask: &BinaryMask<T>, axis: SliceAxis) -> Option<(usize, usize)> {
    let w = axis.frame()[2];
    let g = mask.grid();
    let mut lo = usize::MAX;
    let mut hi = 0;
    for l in mask.true_indices() {
        let v = g.index_of(l);
        let c = [v.i, v.j, v.k][w];
        lo = lo.min(c);
        hi = hi.max(c);
    }
    (lo != usize::MAX).then_some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Grid, Volume};

    fn mask_from(dims: [usize; 3], set: impl Fn(usize, usize, usize) -> bool) -> BinaryMask<f64> {
        let g = Grid::new(dims, [1.0; 3]).unwrap();
        let mut d = vec![false; g.len()];
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    d[g.linear(i, j, k)] = set(i, j, k);
                }
            }
        }
        Volume::new(g, d).unwrap()
    }

    fn signed_area(pts: &[Vector3<f64>]) -> f64 {
        (0..pts.len())
            .map(|i| {
                let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
            / 2.0
    }

    #[test]
    fn square_has_36_boundary_voxels() {
        let m = mask_from([14, 14, 3], |i, j, k| k == 1 && (2..12).contains(&i) && (2..12).contains(&j));
        let cs = extract_slice_contours(&m, SliceAxis::Z).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].slice, 1);
        assert_eq!(cs[0].points.len(), 36);
        let mut uniq: Vec<_> = cs[0].points.iter().map(|p| (p.x as i64, p.y as i64)).collect();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 36);
        assert!(signed_area(&cs[0].points) > 0.0);
        // Consecutive points are 8-neighbours.
        let p = &cs[0].points;
        for i in 0..p.len() {
            let d = p[(i + 1) % p.len()] - p[i];
            assert!(d.x.abs() <= 1.0 && d.y.abs() <= 1.0 && d.norm() > 0.0);
        }
    }

    #[test]
    fn empty_mask_gives_no_contours() {
        let m = mask_from([5, 5, 5], |_, _, _| false);
        assert!(extract_slice_contours(&m, SliceAxis::Z).unwrap().is_empty());
    }

    #[test]
    fn two_blobs_rejected() {
        let m = mask_from([12, 6, 2], |i, j, k| k == 0 && j > 1 && j < 4 && (i < 3 || i > 7));
        assert!(matches!(
            extract_slice_contours(&m, SliceAxis::Z),
            Err(Error::NonSimpleSlice { slice: 0, components: 2 })
        ));
    }

    #[test]
    fn holes_are_ignored() {
        let m = mask_from([9, 9, 1], |i, j, _| (1..8).contains(&i) && (1..8).contains(&j) && !(i == 4 && j == 4));
        let c = slice_contour(&m, SliceAxis::Z, 0).unwrap().unwrap();
        assert_eq!(c.points.len(), 24);
    }

    #[test]
    fn degenerate_shapes_terminate() {
        let m = mask_from([5, 5, 1], |i, j, _| i == 2 && j == 2);
        assert_eq!(slice_contour(&m, SliceAxis::Z, 0).unwrap().unwrap().points.len(), 1);
        let m = mask_from([6, 5, 1], |i, j, _| j == 2 && (1..5).contains(&i));
        let c = slice_contour(&m, SliceAxis::Z, 0).unwrap().unwrap();
        assert_eq!(c.points.len(), 6);
    }

    #[test]
    fn diagonal_touching_is_one_component() {
        let m = mask_from([6, 6, 1], |i, j, _| (i == 1 && j == 1) || (i == 2 && j == 2) || (i == 3 && j == 3));
        assert!(slice_contour(&m, SliceAxis::Z, 0).unwrap().is_some());
    }

    #[test]
    fn other_axes_are_counterclockwise() {
        let m = mask_from([5, 8, 8], |i, j, k| i == 2 && (2..6).contains(&j) && (1..7).contains(&k));
        let c = slice_contour(&m, SliceAxis::X, 2).unwrap().unwrap();
        assert_eq!(c.points.len(), 16);
        assert!(c.points.iter().all(|p| p.x == 2.0));
        let area: f64 = (0..c.points.len())
            .map(|i| {
                let (a, b) = (c.points[i], c.points[(i + 1) % c.points.len()]);
                a.y * b.z - b.y * a.z
            })
            .sum();
        assert!(area > 0.0);
        assert_eq!(slice_extent(&m, SliceAxis::Z), Some((1, 6)));
    }
}
