//! Voxelization of slice-stacked landmark shapes, used for the pairwise
//! non-overlap check of model assemblies.

use nalgebra::Vector3;
use rayon::prelude::*;

use super::model::ObjectKind;
use crate::error::{Error, Result};
use crate::scalar::Real;

type P = Vector3<f64>;

/// Closed triangle mesh: rings of landmarks joined slice to slice, with fan
/// caps on the first and last ring.
#[derive(Debug, Clone)]
pub struct StackMesh {
    pub lateral: Vec<[P; 3]>,
    pub caps: Vec<[P; 3]>,
}

impl StackMesh {
    pub fn new<T: Real>(landmarks: &[Vector3<T>], points_per_slice: usize) -> Result<Self> {
        let m = points_per_slice;
        if m < 3 || landmarks.is_empty() || !landmarks.len().is_multiple_of(m) {
            return Err(Error::ShapeMismatch(format!(
                "{} landmarks do not form rings of {m}",
                landmarks.len()
            )));
        }
        let pts: Vec<P> = landmarks
            .iter()
            .map(|p| P::new(p.x.as_f64(), p.y.as_f64(), p.z.as_f64()))
            .collect();
        let rings: Vec<&[P]> = pts.chunks_exact(m).collect();
        let mut lateral = Vec::with_capacity(2 * m * rings.len());
        for w in rings.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            for j in 0..m {
                let k = (j + 1) % m;
                lateral.push([lo[j], lo[k], hi[k]]);
                lateral.push([lo[j], hi[k], hi[j]]);
            }
        }
        let mut caps = Vec::with_capacity(2 * m);
        let first = rings[0];
        let last = rings[rings.len() - 1];
        let c0 = first.iter().sum::<P>() / m as f64;
        let c1 = last.iter().sum::<P>() / m as f64;
        for j in 0..m {
            let k = (j + 1) % m;
            caps.push([c0, first[k], first[j]]);
            caps.push([c1, last[j], last[k]]);
        }
        Ok(Self { lateral, caps })
    }

    fn triangles(&self) -> impl Iterator<Item = &[P; 3]> {
        self.lateral.iter().chain(&self.caps)
    }

    fn bounds(&self) -> (P, P) {
        let mut lo = P::repeat(f64::INFINITY);
        let mut hi = P::repeat(f64::NEG_INFINITY);
        for t in self.triangles() {
            for v in t {
                lo = lo.inf(v);
                hi = hi.sup(v);
            }
        }
        (lo, hi)
    }

    /// Generalized winding number of the closed mesh around `p`.
    pub fn winding_number(&self, p: &P) -> f64 {
        let mut total = 0.0;
        for t in self.triangles() {
            let (a, b, c) = (t[0] - p, t[1] - p, t[2] - p);
            let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
            let num = a.dot(&b.cross(&c));
            let den = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
            total += 2.0 * num.atan2(den);
        }
        total / (4.0 * std::f64::consts::PI)
    }
}

fn closest_on_triangle(p: &P, t: &[P; 3]) -> P {
    let (a, b, c) = (t[0], t[1], t[2]);
    let (ab, ac, ap) = (b - a, c - a, p - a);
    let (d1, d2) = (ab.dot(&ap), ac.dot(&ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let (d3, d4) = (ab.dot(&bp), ac.dot(&bp));
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let (d5, d6) = (ab.dot(&cp), ac.dot(&cp));
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = va + vb + vc;
    if denom.abs() < f64::MIN_POSITIVE {
        // Zero-area triangle: fall back to its vertices.
        return [a, b, c]
            .into_iter()
            .min_by(|x, y| (x - p).norm().total_cmp(&(y - p).norm()))
            .expect("three vertices");
    }
    a + ab * (vb / denom) + ac * (vc / denom)
}

/// Distance from `p` to a triangle.
pub fn point_triangle_distance(p: &P, t: &[P; 3]) -> f64 {
    (closest_on_triangle(p, t) - p).norm()
}

/// Half-thickness of the band that stands in for a shell surface.
pub fn default_shell_band<T: Real>(spacing: [T; 3]) -> f64 {
    let max = spacing.iter().map(|s| s.as_f64()).fold(0.0, f64::max);
    0.5 * max * 3f64.sqrt()
}

/// Sorted voxel indices on the lattice `x = index · spacing`.
pub type VoxelSet = Vec<[i64; 3]>;

fn lattice_range(lo: f64, hi: f64, h: f64) -> (i64, i64) {
    ((lo / h).ceil() as i64, (hi / h).floor() as i64)
}

/// Voxels whose centers a landmark shape occupies: inside the closed mesh
/// for solids, within the band of the lateral surface for shells.
pub fn voxelize_shape<T: Real>(
    landmarks: &[Vector3<T>],
    points_per_slice: usize,
    kind: ObjectKind,
    spacing: [T; 3],
) -> Result<VoxelSet> {
    let mesh = StackMesh::new(landmarks, points_per_slice)?;
    let h = spacing.map(|s| s.as_f64());
    let mut out = match kind {
        ObjectKind::Solid => {
            let (lo, hi) = mesh.bounds();
            let r: Vec<(i64, i64)> = (0..3).map(|a| lattice_range(lo[a], hi[a], h[a])).collect();
            (r[2].0..=r[2].1)
                .into_par_iter()
                .flat_map_iter(|k| {
                    let mut slab = Vec::new();
                    for j in r[1].0..=r[1].1 {
                        for i in r[0].0..=r[0].1 {
                            let p = P::new(i as f64 * h[0], j as f64 * h[1], k as f64 * h[2]);
                            if mesh.winding_number(&p).abs() > 0.5 {
                                slab.push([i, j, k]);
                            }
                        }
                    }
                    slab
                })
                .collect::<Vec<_>>()
        }
        ObjectKind::Shell => {
            let band = default_shell_band(spacing);
            let mut hits = Vec::new();
            for t in &mesh.lateral {
                let lo = t[0].inf(&t[1]).inf(&t[2]).add_scalar(-band);
                let hi = t[0].sup(&t[1]).sup(&t[2]).add_scalar(band);
                let r: Vec<(i64, i64)> = (0..3).map(|a| lattice_range(lo[a], hi[a], h[a])).collect();
                for k in r[2].0..=r[2].1 {
                    for j in r[1].0..=r[1].1 {
                        for i in r[0].0..=r[0].1 {
                            let p = P::new(i as f64 * h[0], j as f64 * h[1], k as f64 * h[2]);
                            if point_triangle_distance(&p, t) <= band {
                                hits.push([i, j, k]);
                            }
                        }
                    }
                }
            }
            hits
        }
    };
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Number of voxels present in both sorted sets.
pub fn overlap_count(a: &VoxelSet, b: &VoxelSet) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}
