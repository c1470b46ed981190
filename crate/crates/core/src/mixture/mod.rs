//! Error-aware mixture model.
//!
//! Each component `j` models an embedding as a diagonal Gaussian
//! `N(mu_j, diag(sigma_j))`, the class label as `Cat(p_j)`, and the model
//! prediction as `Cat(phat_j)`. The categorical terms are raised to the power
//! `gamma`, which trades embedding coherence against error homogeneity:
//!
//! ```text
//! l(phi) = sum_i log sum_j p_S[j] N(z_i; mu_j, sigma_j) p_j[y_i]^gamma phat_j[yhat_i]^gamma
//! ```
//!
//! The model is fit by EM from a confusion-matrix initialization, and the
//! `k_hat` components with the largest `sum_c |phat_j[c] - p_j[c]|` are
//! returned as slices.

mod em;
mod model;
mod pca;
mod select;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::DataError;
use crate::scalar::Scalar;

pub use em::{e_step, fit, init_confusion, m_step, FitDiagnostics, MixtureFit};
pub use model::{score, ModelDocument};
pub use pca::{reduce_dim, ProjectionRecord};
pub use select::{select_slices, slice_error_score};

#[derive(Debug, Error)]
pub enum FitError {
    #[error("k_bar = {k_bar} is below the {cells} confusion-matrix cells")]
    TooFewSlices { k_bar: usize, cells: usize },
    #[error("{n} examples cannot support {k_bar} mixture components")]
    TooFewExamples { n: usize, k_bar: usize },
    #[error("row {row} has zero likelihood under every component")]
    NumericalUnderflow { row: usize },
    #[error("expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("need at least 2 examples to fit a projection, got {n}")]
    RankDeficient { n: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("model document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

/// Hyperparameters for [`fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Number of mixture components modelled.
    pub k_bar: usize,
    /// Number of slices returned by [`select_slices`].
    pub k_hat: usize,
    pub gamma: f64,
    pub max_iter: usize,
    pub rel_tol: f64,
    /// Upper bound `E` of the uniform initialization noise.
    pub init_noise: f64,
    /// Embeddings wider than this are reduced by PCA before fitting.
    pub pca_threshold: usize,
    pub pca_dim: usize,
    pub cov_floor: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            k_bar: 25,
            k_hat: 5,
            gamma: 10.0,
            max_iter: 100,
            rel_tol: 1e-6,
            init_noise: 0.001,
            pca_threshold: 256,
            pca_dim: 128,
            cov_floor: 1e-6,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        let bad = |m: String| Err(FitError::InvalidConfig(m));
        if self.k_bar == 0 || self.k_hat == 0 {
            return bad("k_bar and k_hat must be positive".into());
        }
        if self.k_hat > self.k_bar {
            return bad(format!("k_hat {} exceeds k_bar {}", self.k_hat, self.k_bar));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!(
                "gamma {} must be a finite non-negative number",
                self.gamma
            ));
        }
        if !(self.rel_tol > 0.0) || !(self.cov_floor > 0.0) || !(self.init_noise >= 0.0) {
            return bad("rel_tol and cov_floor must be positive, init_noise non-negative".into());
        }
        if self.pca_dim == 0 {
            return bad("pca_dim must be positive".into());
        }
        Ok(())
    }
}

/// Parameters of the error-aware mixture, one entry per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MixtureParams<T> {
    pub p_s: Vec<T>,
    pub means: Vec<Vec<T>>,
    /// Diagonal covariance entries.
    pub variances: Vec<Vec<T>>,
    /// Label distribution per component.
    pub label_probs: Vec<Vec<T>>,
    /// Prediction distribution per component.
    pub pred_probs: Vec<Vec<T>>,
}

impl<T: Scalar> MixtureParams<T> {
    pub fn k(&self) -> usize {
        self.p_s.len()
    }

    pub fn d(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn num_classes(&self) -> usize {
        self.label_probs.first().map_or(0, Vec::len)
    }

    /// Checks shapes, simplex constraints (within `tol`), and the variance floor.
    pub fn validate(&self, cov_floor: f64, tol: f64) -> Result<(), FitError> {
        let k = self.k();
        let (d, c) = (self.d(), self.num_classes());
        let shapes_ok = k > 0
            && self.means.len() == k
            && self.variances.len() == k
            && self.label_probs.len() == k
            && self.pred_probs.len() == k
            && self
                .means
                .iter()
                .chain(&self.variances)
                .all(|v| v.len() == d)
            && self
                .label_probs
                .iter()
                .chain(&self.pred_probs)
                .all(|v| v.len() == c);
        if !shapes_ok {
            return Err(FitError::InvalidConfig(
                "inconsistent parameter shapes".into(),
            ));
        }
        let on_simplex = |v: &[T]| {
            v.iter().all(|x| x.as_f64() >= 0.0)
                && (v.iter().map(|x| x.as_f64()).sum::<f64>() - 1.0).abs() <= tol
        };
        if !on_simplex(&self.p_s)
            || !self
                .label_probs
                .iter()
                .chain(&self.pred_probs)
                .all(|v| on_simplex(v))
        {
            return Err(FitError::InvalidConfig(
                "probability vector off the simplex".into(),
            ));
        }
        if self
            .variances
            .iter()
            .flatten()
            .any(|v| !(v.as_f64() >= cov_floor * (1.0 - 1e-6)))
        {
            return Err(FitError::InvalidConfig("variance below the floor".into()));
        }
        Ok(())
    }
}

/// Posterior component memberships, row-major `n x k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities<T> {
    n: usize,
    k: usize,
    q: Vec<T>,
}

impl<T: Scalar> Responsibilities<T> {
    pub fn from_raw(n: usize, k: usize, q: Vec<T>) -> Self {
        assert_eq!(q.len(), n * k, "responsibility matrix shape");
        Self { n, k, q }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.q[i * self.k..(i + 1) * self.k]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.q[i * self.k + j]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn values(&self) -> &[T] {
        &self.q
    }
}
