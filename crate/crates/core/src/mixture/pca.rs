use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dataset::EmbeddingMatrix;
use crate::scalar::Scalar;

use super::{FitConfig, FitError};

/// Affine map fit on training embeddings and reused on held-out data.
/// `basis` is row-major `output_dim x input_dim`; an identity record has an
/// empty mean and basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ProjectionRecord<T> {
    pub input_dim: usize,
    pub output_dim: usize,
    pub mean: Vec<T>,
    pub basis: Vec<T>,
    /// Variance captured by each retained direction, descending.
    pub eigenvalues: Vec<f64>,
    /// Set when fewer than `pca_dim` directions were available.
    pub rank_deficient: bool,
}

impl<T: Scalar> ProjectionRecord<T> {
    pub fn identity(d: usize) -> Self {
        Self {
            input_dim: d,
            output_dim: d,
            mean: Vec::new(),
            basis: Vec::new(),
            eigenvalues: Vec::new(),
            rank_deficient: false,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.basis.is_empty()
    }

    /// Principal directions of `train`, keeping `min(max_dim, n - 1, d)`.
    pub fn fit_pca(train: &EmbeddingMatrix<T>, max_dim: usize) -> Result<Self, FitError> {
        let (n, d) = (train.n(), train.d());
        if n < 2 {
            return Err(FitError::RankDeficient { n });
        }
        let keep = max_dim.min(n - 1).min(d);
        let mut mean = vec![0.0f64; d];
        for row in train.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v.as_f64();
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let centered = DMatrix::from_fn(n, d, |i, k| train.row(i)[k].as_f64() - mean[k]);
        let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then(a.cmp(&b))
        });
        let mut basis = Vec::with_capacity(keep * d);
        let mut eigenvalues = Vec::with_capacity(keep);
        for &col in order.iter().take(keep) {
            let v = eig.eigenvectors.column(col);
            // sign convention: largest-magnitude component positive
            let pivot = (0..d)
                .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
                .unwrap_or(0);
            let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
            basis.extend(v.iter().map(|&x| T::lit(sign * x)));
            eigenvalues.push(eig.eigenvalues[col].max(0.0));
        }
        if keep < max_dim.min(d) {
            log::warn!("projection keeps {keep} of {max_dim} requested directions (n = {n})");
        }
        Ok(Self {
            input_dim: d,
            output_dim: keep,
            mean: mean.into_iter().map(T::lit).collect(),
            basis,
            eigenvalues,
            rank_deficient: keep < max_dim.min(d),
        })
    }

    pub fn apply(&self, emb: &EmbeddingMatrix<T>) -> Result<EmbeddingMatrix<T>, FitError> {
        if emb.d() != self.input_dim {
            return Err(FitError::DimensionMismatch {
                expected: self.input_dim,
                found: emb.d(),
            });
        }
        if self.is_identity() {
            return Ok(emb.clone());
        }
        let d = self.input_dim;
        let mut out = Vec::with_capacity(emb.n() * self.output_dim);
        let mut centered = vec![T::zero(); d];
        for row in emb.rows() {
            for k in 0..d {
                centered[k] = row[k] - self.mean[k];
            }
            for dir in self.basis.chunks(d) {
                out.push(dir.iter().zip(&centered).map(|(&a, &b)| a * b).sum());
            }
        }
        Ok(EmbeddingMatrix::new(emb.n(), self.output_dim, out)?)
    }
}

/// Fits the projection on `train` (PCA when `d > pca_threshold`, identity
/// otherwise) and applies it to both matrices.
pub fn reduce_dim<T: Scalar>(
    train: &EmbeddingMatrix<T>,
    apply: &EmbeddingMatrix<T>,
    cfg: &FitConfig,
) -> Result<(EmbeddingMatrix<T>, EmbeddingMatrix<T>, ProjectionRecord<T>), FitError> {
    if apply.d() != train.d() {
        return Err(FitError::DimensionMismatch {
            expected: train.d(),
            found: apply.d(),
        });
    }
    let record = if train.d() > cfg.pca_threshold {
        ProjectionRecord::fit_pca(train, cfg.pca_dim)?
    } else {
        ProjectionRecord::identity(train.d())
    };
    Ok((record.apply(train)?, record.apply(apply)?, record))
}
