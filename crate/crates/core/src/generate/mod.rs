//! Programmatic construction of slice discovery settings: correlation, rare,
//! and noisy-label subsampling of a binary-attribute base table, synthetic
//! model predictions drawn from four beta distributions, and a Gaussian
//! cluster generator for desk-scale embeddings.

mod base;
mod beta;
mod builders;
mod correlation;
mod synthetic;

use thiserror::Error;

use crate::dataset::{DataError, SliceType};

pub use base::BaseTable;
pub use beta::{beta_survival_at_half, solve_beta, BETA_MAX_STEPS, RATE_MAX, RATE_MIN};
pub use builders::{
    build_correlation_setting, build_noisy_setting, build_rare_setting, build_setting,
    GenerationConfig, ModelConfig, PredictionSource, SliceRequest,
};
pub use correlation::{correlation_counts, CellCounts};
pub use synthetic::{synth_embeddings, synth_predictions, ClusterLayout, SyntheticModelSpec};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("infeasible cell counts (n11={n11}, n10={n10}, n01={n01}, n00={n00})")]
    InfeasibleCounts {
        n11: i64,
        n10: i64,
        n01: i64,
        n00: i64,
    },
    #[error("base table has {available} rows in cell {cell} but {needed} are required")]
    InsufficientBase {
        cell: String,
        needed: usize,
        available: usize,
    },
    #[error("alpha {alpha} is outside the legal range for {slice_type} slices")]
    AlphaOutOfRange { slice_type: SliceType, alpha: f64 },
    #[error("beta solve did not converge for target rate {target} with concentration {kappa}")]
    NoConvergence { target: f64, kappa: f64 },
    #[error("synthetic predictions need a binary task, got {0} classes")]
    NotBinary(usize),
    #[error("degenerate model: {0}")]
    DegenerateSpec(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Data(#[from] DataError),
}
