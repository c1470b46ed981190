use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{EmbeddingMatrix, LabeledSplit, SliceScores};
use crate::rng::stream;
use crate::scalar::Scalar;

use super::{rank_normalize, BaselineError};

pub const MULTIACC_ID: &str = "multiacc";
const PROB_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MultiaccuracyConfig {
    pub eta: f64,
    /// One discovered slice per round.
    pub rounds: usize,
    pub fit_fraction: f64,
    pub ridge_lambda: f64,
    pub seed: u64,
}

impl Default for MultiaccuracyConfig {
    fn default() -> Self {
        Self {
            eta: 0.1,
            rounds: 5,
            fit_fraction: 0.7,
            ridge_lambda: 1.0,
            seed: 0,
        }
    }
}

/// Gradient of the cross-entropy with respect to the prediction,
/// `1 / (1 - h - y)`.
pub fn multiaccuracy_target(h: f64, y: usize) -> f64 {
    1.0 / (1.0 - h - y as f64)
}

/// Solves `(X^T X + lambda I) beta = X^T t`.
pub fn ridge(x: &[Vec<f64>], t: &[f64], lambda: f64) -> Result<Vec<f64>, BaselineError> {
    let p = x.first().map_or(0, Vec::len);
    let xm = DMatrix::from_fn(x.len(), p, |i, j| x[i][j]);
    let tv = DVector::from_column_slice(t);
    let mut gram = xm.transpose() * &xm;
    for j in 0..p {
        gram[(j, j)] += lambda;
    }
    let rhs = xm.transpose() * tv;
    let beta = gram.cholesky().ok_or(BaselineError::Singular)?.solve(&rhs);
    Ok(beta.iter().copied().collect())
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// One ridge auditor per round.
#[derive(Debug, Clone)]
pub struct MultiaccuracyModel {
    /// Coefficients over `[z, 1]` per round.
    pub coefficients: Vec<Vec<f64>>,
    /// Pearson correlation between the auditor and its target on the held-out
    /// part of each round.
    pub heldout_correlation: Vec<f64>,
    /// Number of probabilities that had to be pulled off 0 or 1.
    pub clamped: usize,
    pub train_scores: SliceScores<f64>,
}

fn design<T: Scalar>(emb: &EmbeddingMatrix<T>) -> Vec<Vec<f64>> {
    emb.rows()
        .map(|z| {
            z.iter()
                .map(|v| v.as_f64())
                .chain(std::iter::once(1.0))
                .collect()
        })
        .collect()
}

fn audit(x: &[f64], beta: &[f64]) -> f64 {
    x.iter().zip(beta).map(|(a, b)| a * b).sum()
}

/// Multiaccuracy boosting used as a slice finder: each round regresses the
/// loss gradient on the embeddings, applies the multiplicative update to the
/// predicted probability, and reports `|f|` rank-normalized as a slice.
pub fn multiaccuracy_fit<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    split: &LabeledSplit,
    cfg: &MultiaccuracyConfig,
) -> Result<MultiaccuracyModel, BaselineError> {
    if split.num_classes() != 2 {
        return Err(BaselineError::NotBinary(split.num_classes()));
    }
    if !(cfg.eta > 0.0)
        || !(cfg.fit_fraction > 0.0 && cfg.fit_fraction < 1.0)
        || cfg.rounds == 0
        || cfg.ridge_lambda < 0.0
    {
        return Err(BaselineError::InvalidConfig(
            "need eta > 0, 0 < fit_fraction < 1, rounds >= 1, ridge_lambda >= 0".into(),
        ));
    }
    let probs = split
        .prediction_probs()
        .ok_or(BaselineError::MissingProbabilities)?;
    let n = split.n();
    let mut clamped = 0;
    let mut h: Vec<f64> = probs
        .iter()
        .map(|p| {
            let v = p[1].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            clamped += usize::from(v != p[1]);
            v
        })
        .collect();
    if clamped > 0 {
        log::warn!("{clamped} predicted probabilities on the boundary were clamped");
    }
    let x = design(emb);
    let n_fit = ((cfg.fit_fraction * n as f64).round() as usize).clamp(1, n);
    let mut coefficients = Vec::with_capacity(cfg.rounds);
    let mut heldout_correlation = Vec::with_capacity(cfg.rounds);
    let mut columns = Vec::with_capacity(cfg.rounds);
    for round in 0..cfg.rounds {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut stream(cfg.seed, &["multiacc", &round.to_string()]));
        let (fit_idx, held_idx) = order.split_at(n_fit);
        let target: Vec<f64> = (0..n)
            .map(|i| multiaccuracy_target(h[i], split.labels()[i]))
            .collect();
        let fit_x: Vec<Vec<f64>> = fit_idx.iter().map(|&i| x[i].clone()).collect();
        let fit_t: Vec<f64> = fit_idx.iter().map(|&i| target[i]).collect();
        let beta = ridge(&fit_x, &fit_t, cfg.ridge_lambda)?;
        let f: Vec<f64> = x.iter().map(|row| audit(row, &beta)).collect();
        let corr = if held_idx.len() >= 2 {
            let hf: Vec<f64> = held_idx.iter().map(|&i| f[i]).collect();
            let ht: Vec<f64> = held_idx.iter().map(|&i| target[i]).collect();
            pearson(&hf, &ht)
        } else {
            0.0
        };
        heldout_correlation.push(corr);
        for (hi, fi) in h.iter_mut().zip(&f) {
            let logit = (*hi / (1.0 - *hi)).ln() - cfg.eta * fi;
            *hi = (1.0 / (1.0 + (-logit).exp())).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        }
        columns.push(rank_normalize(
            &f.iter().map(|v| v.abs()).collect::<Vec<_>>(),
        ));
        coefficients.push(beta);
    }
    Ok(MultiaccuracyModel {
        coefficients,
        heldout_correlation,
        clamped,
        train_scores: SliceScores::from_columns(MULTIACC_ID, &columns)?,
    })
}

impl MultiaccuracyModel {
    /// Rank-normalized `|f|` of each round's auditor on new data.
    pub fn score<T: Scalar>(
        &self,
        emb: &EmbeddingMatrix<T>,
    ) -> Result<SliceScores<T>, BaselineError> {
        let x = design(emb);
        let expected = self.coefficients.first().map_or(0, Vec::len);
        if x[0].len() != expected {
            return Err(crate::mixture::FitError::DimensionMismatch {
                expected: expected - 1,
                found: emb.d(),
            }
            .into());
        }
        let columns: Vec<Vec<T>> = self
            .coefficients
            .iter()
            .map(|beta| {
                let f: Vec<f64> = x.iter().map(|row| audit(row, beta).abs()).collect();
                rank_normalize(&f).into_iter().map(T::lit).collect()
            })
            .collect();
        Ok(SliceScores::from_columns(MULTIACC_ID, &columns)?)
    }
}
