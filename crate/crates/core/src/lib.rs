//! Multi-modal cycle-consistent feature generation for generalized zero-shot learning.
//!
//! A conditional generator learns to synthesize visual features from class semantic
//! vectors under a Wasserstein critic with gradient penalty, optionally regularized by a
//! classification loss and by a cycle-consistency loss through a pretrained
//! visual-to-semantic regressor. Synthesized features for unseen classes then train a
//! softmax classifier that is evaluated under the ZSL and GZSL protocols.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix the
//! 64-bit instantiation used by the training pipeline.

pub mod data;
pub mod diffmath;
pub mod error;
pub mod evaluate;
pub mod losses;
pub mod models;
pub mod rng;
pub mod scalar;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = diffmath::Matrix<f64>;
pub type Tape64 = diffmath::Tape<f64>;
pub type Mlp64 = models::Mlp<f64>;
pub type Dataset64 = data::GzslDataset<f64>;
pub type Artifacts64 = training::TrainArtifacts<f64>;

pub type Matrix32 = diffmath::Matrix<f32>;
pub type Tape32 = diffmath::Tape<f32>;
pub type Mlp32 = models::Mlp<f32>;
