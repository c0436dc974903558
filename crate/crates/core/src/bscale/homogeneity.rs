use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::Scene;

/// Width of the homogeneity function and the FO threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneityParams<T> {
    sigma: T,
    ts: T,
}

impl<T: Real> HomogeneityParams<T> {
    pub fn new(sigma: T, ts: T) -> Result<Self> {
        if !(sigma.is_finite_value() && sigma > T::zero()) {
            return Err(Error::param("sigma", format!("must be > 0, got {}", sigma.as_f64())));
        }
        if !(ts > T::zero() && ts <= T::one()) {
            return Err(Error::param("ts", format!("must lie in (0, 1], got {}", ts.as_f64())));
        }
        Ok(Self { sigma, ts })
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn ts(&self) -> T {
        self.ts
    }
}

/// Zero-mean unnormalized Gaussian `exp(−d² / 2σ²)`.
#[inline]
pub fn homogeneity_weight<T: Real>(d: T, sigma: T) -> T {
    let two_s2 = T::lit(2.0) * sigma * sigma;
    (-(d * d) / two_s2).exp()
}

/// Mean absolute intensity difference over all face-adjacent voxel pairs.
pub fn mean_face_difference<T: Real>(scene: &Scene<T>) -> f64 {
    let [nx, ny, nz] = scene.dims();
    let g = scene.grid();
    let d = scene.data();
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let c = d[g.linear(i, j, k)].as_f64();
                if i + 1 < nx {
                    sum += (c - d[g.linear(i + 1, j, k)].as_f64()).abs();
                    count += 1;
                }
                if j + 1 < ny {
                    sum += (c - d[g.linear(i, j + 1, k)].as_f64()).abs();
                    count += 1;
                }
                if k + 1 < nz {
                    sum += (c - d[g.linear(i, j, k + 1)].as_f64()).abs();
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Scene-derived σ: `factor × mean |face difference|`, falling back to 1 on
/// a constant scene where any positive width behaves identically.
pub fn default_sigma<T: Real>(scene: &Scene<T>, factor: f64) -> T {
    let s = factor * mean_face_difference(scene);
    if s > 0.0 && s.is_finite() {
        T::lit(s)
    } else {
        T::one()
    }
}
