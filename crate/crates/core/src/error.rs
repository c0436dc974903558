use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed volume header {path}: {reason}")]
    Header { path: PathBuf, reason: String },

    #[error("payload length mismatch: header implies {expected} elements, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("scene intensities must be finite and non-negative (voxel {index})")]
    NegativeIntensity { index: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("k_max {k_max} exceeds the hard cap of {cap}")]
    KMaxTooLarge { k_max: usize, cap: usize },

    #[error("slice {slice} has {components} foreground components; one simple region per slice is required")]
    NonSimpleSlice { slice: usize, components: usize },

    #[error("degenerate contour: {0}")]
    DegenerateContour(String),

    #[error("shape {index} is rank deficient (landmarks collinear)")]
    RankDeficientShape { index: usize },

    #[error("shape set mismatch: {0}")]
    ShapeMismatch(String),

    #[error("mean shapes `{a}` and `{b}` overlap in {voxels} voxels")]
    Overlap { a: String, b: String, voxels: usize },

    #[error("degenerate point set: {0}")]
    Degenerate(String),

    #[error("mask is empty")]
    EmptyMask,

    #[error("recognition failed: {0}")]
    RecognitionFailed(String),

    #[error("model assembly carries no learned relationship")]
    MissingRelationship,

    #[error("model file: {0}")]
    Model(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("phantom constraints unsatisfiable after {attempts} resamples")]
    PhantomUnsatisfiable { attempts: usize },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
