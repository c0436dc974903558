//! Exact Euclidean distance transform with anisotropic spacing.

use crate::scalar::Real;
use crate::volume::{BinaryMask, Volume};

/// Lower envelope of parabolas along one line (squared distances in, out).
fn transform_line(f: &[f64], h: f64, out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let h2 = h * h;
    let mut k = 0usize;
    // Skip leading infinite samples: they never form part of the envelope.
    let Some(first) = f.iter().position(|x| x.is_finite()) else {
        out.fill(f64::INFINITY);
        return;
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let cross = |q: usize, p: usize| {
        ((f[q] + h2 * (q * q) as f64) - (f[p] + h2 * (p * p) as f64)) / (2.0 * h2 * (q as f64 - p as f64))
    };
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        let mut s = cross(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = cross(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = h * (q as f64 - p as f64);
        *o = d * d + f[p];
    }
}

/// Distance (mm) from every voxel center to the nearest set voxel center;
/// infinite everywhere when the mask is empty.
pub fn distance_transform<T: Real>(mask: &BinaryMask<T>) -> Volume<T, T> {
    let dims = mask.dims();
    let spacing = mask.spacing().map(|s| s.as_f64());
    let g = mask.grid().clone();
    let mut d: Vec<f64> = mask
        .data()
        .iter()
        .map(|&b| if b { 0.0 } else { f64::INFINITY })
        .collect();
    let longest = *dims.iter().max().expect("three dims");
    let mut line = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    let mut v = vec![0usize; longest];
    let mut z = vec![0.0; longest + 1];
    for axis in 0..3 {
        let n = dims[axis];
        let [a, b] = match axis {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        };
        for y in 0..dims[b] {
            for x in 0..dims[a] {
                let mut idx = [0usize; 3];
                idx[a] = x;
                idx[b] = y;
                for t in 0..n {
                    idx[axis] = t;
                    line[t] = d[g.linear(idx[0], idx[1], idx[2])];
                }
                transform_line(&line[..n], spacing[axis], &mut out[..n], &mut v, &mut z);
                for t in 0..n {
                    idx[axis] = t;
                    d[g.linear(idx[0], idx[1], idx[2])] = out[t];
                }
            }
        }
    }
    let data = d
        .into_iter()
        .map(|x| if x.is_finite() { T::lit(x.sqrt()) } else { T::infinity() })
        .collect();
    Volume::new(g, data).expect("same grid")
}
