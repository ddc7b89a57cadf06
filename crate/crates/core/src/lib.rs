//! Contrastive representation learning for tabular account data.
//!
//! The pipeline: z-score normalization over a four-category feature schema,
//! a trainable linear block per category concatenated into a user
//! representation, a twin MLP encoder with a projection head trained by
//! contrastive losses over augmented views, a logistic-regression probe on
//! frozen encoder outputs, cross-dataset generalization runs, and a
//! black-box brute-force evasion harness against the frozen pipeline.
//!
//! All numeric state is generic over [`Scalar`] (`f32` or `f64`); the
//! `*F64`/`*F32` aliases below pick a width.

pub mod adversarial;
pub mod augmentation;
pub mod checkpoint;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod representation;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type DatasetF64 = dataset::Dataset<f64>;
pub type DatasetF32 = dataset::Dataset<f32>;
pub type NormStatsF64 = dataset::NormStats<f64>;
pub type NormStatsF32 = dataset::NormStats<f32>;
pub type RepresentationParamsF64 = representation::RepresentationParams<f64>;
pub type RepresentationParamsF32 = representation::RepresentationParams<f32>;
pub type ModelParamsF64 = model::ModelParams<f64>;
pub type ModelParamsF32 = model::ModelParams<f32>;
pub type PipelineF64 = pipeline::Pipeline<f64>;
pub type PipelineF32 = pipeline::Pipeline<f32>;
