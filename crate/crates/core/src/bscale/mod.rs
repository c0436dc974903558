//! Ball-scale encoding of scenes.

mod homogeneity;
mod iwose;
mod shell;
mod threshold;

pub use homogeneity::{default_sigma, homogeneity_weight, mean_face_difference, HomogeneityParams};
pub use iwose::{bscale_at, compute_wbs, compute_wbs_with_table, compute_weighted, fraction_of_object};
pub use shell::{normalized_sq_distance, ShellTable};
pub use threshold::{percentile_interval, percentile_sorted, threshold_wbs};

use serde::{Deserialize, Serialize};

use crate::config::{self, Config, DEFAULT_SIGMA_FACTOR};
use crate::error::Result;
use crate::scalar::Real;
use crate::volume::{BScaleScene, BinaryMask, Scene, WbsScene};

/// How b-scale is computed and thresholded; stored with trained models so
/// recognition reproduces the training encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BScaleSettings {
    /// Fixed σ, or `None` to derive it per scene.
    pub sigma: Option<f64>,
    pub ts: f64,
    pub kmax: usize,
    pub threshold_percentile: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_interval: Option<[f64; 2]>,
}

impl Default for BScaleSettings {
    fn default() -> Self {
        Self::from_config(&Config::default())
    }
}

impl BScaleSettings {
    pub fn from_config(cfg: &Config) -> Self {
        Self {
            sigma: cfg.sigma,
            ts: cfg.ts,
            kmax: cfg.kmax,
            threshold_percentile: cfg.threshold_percentile,
            threshold_interval: cfg.threshold_interval,
        }
    }

    pub fn homogeneity<T: Real>(&self, scene: &Scene<T>) -> Result<HomogeneityParams<T>> {
        config::validate_ts(self.ts)?;
        let sigma = match self.sigma {
            Some(s) => T::lit(s),
            None => default_sigma(scene, DEFAULT_SIGMA_FACTOR),
        };
        HomogeneityParams::new(sigma, T::lit(self.ts))
    }

    /// Full encoding of one scene: radii, weighted radii, the threshold
    /// interval and resulting rough-object mask.
    pub fn encode<T: Real>(&self, scene: &Scene<T>) -> Result<Encoded<T>> {
        self.encode_inner(scene, true)
    }

    /// As [`encode`](Self::encode) without the radius scene, which lets
    /// zero-intensity voxels be skipped. The weighted scene, interval and
    /// mask are identical.
    pub fn encode_weighted<T: Real>(&self, scene: &Scene<T>) -> Result<Encoded<T>> {
        self.encode_inner(scene, false)
    }

    fn encode_inner<T: Real>(&self, scene: &Scene<T>, with_radii: bool) -> Result<Encoded<T>> {
        config::validate_kmax(self.kmax)?;
        let params = self.homogeneity(scene)?;
        let (radii, wbs) = if with_radii {
            let (r, w) = compute_wbs(scene, &params, self.kmax)?;
            (Some(r), w)
        } else {
            (None, compute_weighted(scene, &params, self.kmax)?)
        };
        let (lo, hi) = self.interval(&wbs)?;
        let mask = threshold_wbs(&wbs, lo, hi)?;
        Ok(Encoded {
            radii,
            wbs,
            sigma: params.sigma(),
            interval: (lo, hi),
            mask,
        })
    }

    pub fn interval<T: Real>(&self, wbs: &WbsScene<T>) -> Result<(T, T)> {
        match self.threshold_interval {
            Some([lo, hi]) => Ok((T::lit(lo), T::lit(hi))),
            None => percentile_interval(wbs, self.threshold_percentile),
        }
    }

    /// `key = value` pairs recorded in output volume headers.
    pub fn header_fields(&self, sigma: f64) -> Vec<(String, String)> {
        vec![
            ("BScaleSigma".into(), sigma.to_string()),
            ("BScaleTs".into(), self.ts.to_string()),
            ("BScaleKMax".into(), self.kmax.to_string()),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Encoded<T> {
    /// Absent when produced by [`BScaleSettings::encode_weighted`].
    pub radii: Option<BScaleScene<T>>,
    pub wbs: WbsScene<T>,
    pub sigma: T,
    pub interval: (T, T),
    pub mask: BinaryMask<T>,
}
