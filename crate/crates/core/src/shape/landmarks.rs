//! Equal arc-length landmarking of slice contours.

use nalgebra::Vector3;

use super::contour::{slice_contour, slice_extent, SliceAxis};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::BinaryMask;

/// Where the first landmark of each contour goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StartRule {
    /// Contour point of largest x, ties broken by largest y.
    #[default]
    MaxX,
    /// A fixed contour point.
    Index(usize),
}

impl StartRule {
    fn pick<T: Real>(self, contour: &[Vector3<T>]) -> Result<usize> {
        match self {
            StartRule::Index(i) if i < contour.len() => Ok(i),
            StartRule::Index(i) => Err(Error::param(
                "start_rule",
                format!("index {i} outside a contour of {} points", contour.len()),
            )),
            StartRule::MaxX => Ok(contour
                .iter()
                .enumerate()
                .fold(0, |best, (i, p)| {
                    let b = contour[best];
                    if p.x > b.x || (p.x == b.x && p.y > b.y) {
                        i
                    } else {
                        best
                    }
                })),
        }
    }
}

/// `m` points at equal arc-length steps around a closed polyline, starting
/// at the point selected by `rule`.
pub fn equal_space_landmarks<T: Real>(contour: &[Vector3<T>], m: usize, rule: StartRule) -> Result<Vec<Vector3<T>>> {
    if m < 3 {
        return Err(Error::param("m", format!("need at least 3 landmarks, got {m}")));
    }
    if contour.len() < 2 {
        return Err(Error::DegenerateContour(format!("{} point(s)", contour.len())));
    }
    let start = rule.pick(contour)?;
    let n = contour.len();
    let ring: Vec<Vector3<T>> = (0..=n).map(|i| contour[(start + i) % n]).collect();
    let seg: Vec<T> = ring.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let total = seg.iter().fold(T::zero(), |a, &b| a + b);
    if !(total > T::zero()) {
        return Err(Error::DegenerateContour("zero perimeter".into()));
    }
    let step = total / T::from_usize_exact(m);
    let mut out = Vec::with_capacity(m);
    let mut s_idx = 0;
    let mut walked = T::zero();
    for j in 0..m {
        let target = step * T::from_usize_exact(j);
        while s_idx + 1 < seg.len() && walked + seg[s_idx] <= target {
            walked += seg[s_idx];
            s_idx += 1;
        }
        let len = seg[s_idx];
        let frac = if len > T::zero() {
            ((target - walked) / len).clamp(T::zero(), T::one())
        } else {
            T::zero()
        };
        out.push(ring[s_idx] + (ring[s_idx + 1] - ring[s_idx]) * frac);
    }
    Ok(out)
}

/// Slice indices sampled for an object spanning `[lo, hi]`: the `count`
/// interior points of an equal subdivision, rounded to the nearest slice.
pub fn sampled_slices(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    let span = (hi - lo) as f64;
    (0..count)
        .map(|i| lo + (span * (i + 1) as f64 / (count + 1) as f64).round() as usize)
        .collect()
}

/// Landmarks of a whole object: `m` per contour on `slices` slices across
/// its z-extent, concatenated slice by slice.
pub fn landmark_object<T: Real>(
    mask: &BinaryMask<T>,
    m: usize,
    slices: usize,
    rule: StartRule,
) -> Result<Vec<Vector3<T>>> {
    let (lo, hi) = slice_extent(mask, SliceAxis::Z).ok_or(Error::EmptyMask)?;
    let mut out = Vec::with_capacity(m * slices);
    for k in sampled_slices(lo, hi, slices) {
        let c = slice_contour(mask, SliceAxis::Z, k)?
            .ok_or_else(|| Error::DegenerateContour(format!("slice {k} is empty")))?;
        out.extend(equal_space_landmarks(&c.points, m, rule)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn circle_gaps_are_equal() {
        let r = 40.0 / (2.0 * std::f64::consts::PI);
        let n = 4000;
        let circle: Vec<_> = (0..n)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                Vector3::new(r * a.cos(), r * a.sin(), 0.0)
            })
            .collect();
        let lm = equal_space_landmarks(&circle, 8, StartRule::MaxX).unwrap();
        assert_eq!(lm.len(), 8);
        for i in 0..8 {
            let a = lm[i];
            let b = lm[(i + 1) % 8];
            let arc = r * (a.dot(&b) / (r * r)).clamp(-1.0, 1.0).acos();
            assert_relative_eq!(arc, 5.0, epsilon = 1e-3);
        }
        assert_relative_eq!(lm[0], Vector3::new(r, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn square_midpoints() {
        // Perimeter walk of a 2x2 square, counterclockwise from the
        // midpoint of the right edge.
        let sq = [(1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (-1.0, 1.0), (-1.0, 0.0), (-1.0, -1.0), (0.0, -1.0), (1.0, -1.0)];
        let pts: Vec<_> = sq.iter().map(|&(x, y)| Vector3::new(x, y, 0.0)).collect();
        let lm = equal_space_landmarks(&pts, 4, StartRule::Index(0)).unwrap();
        let want = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (p, w) in lm.iter().zip(want) {
            assert_relative_eq!(*p, Vector3::new(w.0, w.1, 0.0), epsilon = 1e-12);
        }
        assert_eq!(lm, equal_space_landmarks(&pts, 4, StartRule::Index(0)).unwrap());
        // MaxX picks the top-right corner.
        assert_eq!(StartRule::MaxX.pick(&pts).unwrap(), 1);
    }

    #[test]
    fn degenerate_contours_rejected() {
        let one = [Vector3::new(1.0, 2.0, 3.0)];
        assert!(matches!(
            equal_space_landmarks(&one, 4, StartRule::MaxX),
            Err(Error::DegenerateContour(_))
        ));
        let same = [Vector3::new(1.0, 2.0, 3.0); 3];
        assert!(equal_space_landmarks(&same, 4, StartRule::MaxX).is_err());
        let tri: [Vector3<f64>; 3] = [Vector3::zeros(), Vector3::x(), Vector3::y()];
        assert!(equal_space_landmarks(&tri, 2, StartRule::MaxX).is_err());
    }

    #[test]
    fn slice_sampling() {
        assert_eq!(sampled_slices(0, 10, 4), vec![2, 4, 6, 8]);
        assert_eq!(sampled_slices(5, 5, 3), vec![5, 5, 5]);
        assert_eq!(sampled_slices(10, 21, 1), vec![16]);
    }
}
