//! Synthetic data, error measures and the leave-one-out harness.

mod dataset;
mod harness;
mod metrics;
mod phantom;

pub use dataset::*;
pub use harness::*;
pub use metrics::*;
pub use phantom::*;
