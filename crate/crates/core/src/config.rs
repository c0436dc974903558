//! Run configuration and the default value of every tunable.
//!
//! The constants here are the only place defaults are spelled out; the CLI
//! help text and the config echo both read them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Homogeneity threshold `t_s` on the fraction of object.
pub const DEFAULT_TS: f64 = 0.85;
/// Largest ball radius examined per voxel.
pub const DEFAULT_KMAX: usize = 26;
/// Hard ceiling on `k_max`.
pub const KMAX_HARD_CAP: usize = 64;
/// `σ = factor × mean |face-neighbour difference|` when no σ is given.
pub const DEFAULT_SIGMA_FACTOR: f64 = 0.5;
/// Lower end of the default WBs threshold interval, as a percentile of non-zero `r'`.
pub const DEFAULT_THRESHOLD_PERCENTILE: f64 = 75.0;
pub const DEFAULT_LANDMARKS_LARGE: usize = 32;
pub const DEFAULT_LANDMARKS_SMALL: usize = 16;
pub const DEFAULT_SLICES_LARGE: usize = 10;
pub const DEFAULT_SLICES_SMALL: usize = 6;
/// Fraction of shape variance covered by retained eigenmodes.
pub const DEFAULT_VARIANCE_RETAINED: f64 = 0.95;
/// Body mask cutoff as a fraction of the scene maximum.
pub const DEFAULT_SKIN_CUTOFF: f64 = 0.05;
pub const DEFAULT_SEED: u64 = 42;
/// Euler decomposition used for reporting: intrinsic x (heading), y (attitude), z (bank).
pub const EULER_CONVENTION: &str = "xyz-intrinsic";

pub const DEFAULT_LARGE_OBJECTS: [&str; 2] = ["skin", "liver"];
pub const DEFAULT_SHELL_OBJECTS: [&str; 1] = ["skin"];
pub const DEFAULT_SKIN_LABEL: &str = "skin";

/// Every tunable of a run. Missing JSON fields take the defaults above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Homogeneity width; `None` derives it from the scene.
    pub sigma: Option<f64>,
    pub ts: f64,
    pub kmax: usize,
    pub threshold_percentile: f64,
    /// Explicit `[lo, hi]` WBs interval, overriding the percentile rule.
    pub threshold_interval: Option<[f64; 2]>,
    pub landmarks_large: usize,
    pub landmarks_small: usize,
    pub slices_large: usize,
    pub slices_small: usize,
    pub large_objects: Vec<String>,
    pub shell_objects: Vec<String>,
    pub skin_label: String,
    pub variance_retained: f64,
    pub skin_cutoff: f64,
    pub euler_convention: String,
    pub seed: u64,
    pub threads: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            sigma: None,
            ts: DEFAULT_TS,
            kmax: DEFAULT_KMAX,
            threshold_percentile: DEFAULT_THRESHOLD_PERCENTILE,
            threshold_interval: None,
            landmarks_large: DEFAULT_LANDMARKS_LARGE,
            landmarks_small: DEFAULT_LANDMARKS_SMALL,
            slices_large: DEFAULT_SLICES_LARGE,
            slices_small: DEFAULT_SLICES_SMALL,
            large_objects: DEFAULT_LARGE_OBJECTS.iter().map(|s| s.to_string()).collect(),
            shell_objects: DEFAULT_SHELL_OBJECTS.iter().map(|s| s.to_string()).collect(),
            skin_label: DEFAULT_SKIN_LABEL.to_string(),
            variance_retained: DEFAULT_VARIANCE_RETAINED,
            skin_cutoff: DEFAULT_SKIN_CUTOFF,
            euler_convention: EULER_CONVENTION.to_string(),
            seed: DEFAULT_SEED,
            threads: 0,
        }
    }
}

impl Config {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Config = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        validate_ts(self.ts)?;
        validate_kmax(self.kmax)?;
        validate_percentile(self.threshold_percentile)?;
        if let Some(s) = self.sigma {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::param("sigma", format!("must be > 0, got {s}")));
            }
        }
        if let Some([lo, hi]) = self.threshold_interval {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::param(
                    "threshold_interval",
                    format!("need lo <= hi, got [{lo}, {hi}]"),
                ));
            }
        }
        for (name, v) in [
            ("landmarks_large", self.landmarks_large),
            ("landmarks_small", self.landmarks_small),
        ] {
            if v < 3 {
                return Err(Error::param(name, format!("need at least 3 points per slice, got {v}")));
            }
        }
        for (name, v) in [("slices_large", self.slices_large), ("slices_small", self.slices_small)] {
            if v == 0 {
                return Err(Error::param(name, "need at least one slice"));
            }
        }
        if !(self.variance_retained > 0.0 && self.variance_retained <= 1.0) {
            return Err(Error::param(
                "variance_retained",
                format!("must lie in (0, 1], got {}", self.variance_retained),
            ));
        }
        if !(self.skin_cutoff >= 0.0 && self.skin_cutoff < 1.0) {
            return Err(Error::param(
                "skin_cutoff",
                format!("must lie in [0, 1), got {}", self.skin_cutoff),
            ));
        }
        if self.euler_convention != EULER_CONVENTION {
            return Err(Error::param(
                "euler_convention",
                format!("only `{EULER_CONVENTION}` is supported"),
            ));
        }
        Ok(())
    }

    /// Landmarks per slice and slice count for an object label.
    pub fn landmarking_for(&self, label: &str) -> (usize, usize) {
        if self.large_objects.iter().any(|l| l == label) {
            (self.landmarks_large, self.slices_large)
        } else {
            (self.landmarks_small, self.slices_small)
        }
    }

    pub fn is_shell(&self, label: &str) -> bool {
        self.shell_objects.iter().any(|l| l == label)
    }
}

pub fn validate_ts(ts: f64) -> Result<()> {
    if ts > 0.0 && ts <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("ts", format!("must lie in (0, 1], got {ts}")))
    }
}

pub fn validate_kmax(kmax: usize) -> Result<()> {
    if kmax == 0 {
        Err(Error::param("kmax", "must be at least 1"))
    } else if kmax > KMAX_HARD_CAP {
        Err(Error::KMaxTooLarge {
            k_max: kmax,
            cap: KMAX_HARD_CAP,
        })
    } else {
        Ok(())
    }
}

pub fn validate_percentile(p: f64) -> Result<()> {
    if (0.0..=100.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param("threshold_percentile", format!("must lie in [0, 100], got {p}")))
    }
}
