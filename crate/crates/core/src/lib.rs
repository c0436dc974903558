//! Ball-scale encoding of 3D scenes and one-shot recognition of
//! multi-object shape model assemblies.
//!
//! The numeric core is generic over [`scalar::Real`] (`f32` or `f64`);
//! the aliases below fix the common `f64` instantiation.

// `!(a > b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bscale;
pub mod config;
pub mod error;
pub mod eval;
pub mod metaimage;
pub mod pose;
pub mod recognition;
pub mod scalar;
pub mod shape;
pub mod training;
pub mod volume;

pub use config::Config;
pub use error::{Error, Result};
pub use scalar::Real;

pub type Scene64 = volume::Scene<f64>;
pub type Scene32 = volume::Scene<f32>;
pub type Mask64 = volume::BinaryMask<f64>;
pub type Mask32 = volume::BinaryMask<f32>;
pub type PcSystem64 = pose::PcSystem<f64>;
pub type RelationF64 = pose::RelationF<f64>;
pub type ModelAssembly64 = shape::ModelAssembly<f64>;
pub type ModelAssembly32 = shape::ModelAssembly<f32>;
pub type Pose64 = recognition::Pose<f64>;
pub type RecognitionResult64 = recognition::RecognitionResult<f64>;
