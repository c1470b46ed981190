//! Slice discovery over precomputed embeddings.
//!
//! The crate fits an error-aware Gaussian mixture over embeddings, labels,
//! and predictions to surface coherent subgroups where a classifier
//! underperforms. Around that model it provides benchmark setting
//! generators, four baseline discovery methods, a precision-at-k evaluation
//! harness with bootstrap confidence intervals, and phrase ranking for
//! describing discovered slices.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the CLI uses.

pub mod baselines;
pub mod dataset;
pub mod describe;
pub mod evaluate;
pub mod generate;
pub mod method;
pub mod mixture;
pub mod pipeline;
pub mod rng;
mod scalar;

pub use scalar::{log_sum_exp, Scalar};

pub type Embeddings = dataset::EmbeddingMatrix<f64>;
pub type Embeddings32 = dataset::EmbeddingMatrix<f32>;
pub type Scores = dataset::SliceScores<f64>;
pub type Setting = dataset::SliceSetting<f64>;
pub type Params = mixture::MixtureParams<f64>;
pub type Fit = mixture::MixtureFit<f64>;
