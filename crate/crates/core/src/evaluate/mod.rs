//! Fit on validation, score test, and measure precision-at-k against the
//! ground-truth slices; aggregate over settings with bootstrap intervals.

mod aggregate;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DataError, LabeledSplit, ModelKind, SliceScores, SliceType};
use crate::method::{fit_method, Method, MethodError, MethodsConfig};
use crate::rng::stream;
use crate::scalar::Scalar;
use crate::Setting;

pub use aggregate::{
    aggregate, bootstrap_mean_ci, percentile, render_markdown, resample_indices, AggregateReport,
    AlphaRow, EvalReport, BOOTSTRAP_RESAMPLES,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("k = {k} exceeds the {n} available examples")]
    KTooLarge { k: usize, n: usize },
    #[error("empty group: {0}")]
    EmptyGroup(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Method(#[from] MethodError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Fraction of the `k` highest-scored examples that belong to the slice.
/// Equal scores are ordered by example index.
pub fn precision_at_k<T: Scalar>(scores: &[T], truth: &[bool], k: usize) -> Result<f64, EvalError> {
    if scores.len() != truth.len() {
        return Err(EvalError::InvalidInput(format!(
            "{} scores for {} ground-truth entries",
            scores.len(),
            truth.len()
        )));
    }
    if k == 0 || k > scores.len() {
        return Err(EvalError::KTooLarge { k, n: scores.len() });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores are finite")
    });
    let hits = order[..k].iter().filter(|&&i| truth[i]).count();
    Ok(hits as f64 / k as f64)
}

/// Whether accuracy outside the slice exceeds accuracy inside by strictly
/// more than `epsilon_pp` percentage points.
pub fn check_degradation(
    split: &LabeledSplit,
    slice_col: usize,
    epsilon_pp: f64,
) -> Result<bool, EvalError> {
    if slice_col >= split.num_slices() {
        return Err(EvalError::InvalidInput(format!(
            "no slice column {slice_col}"
        )));
    }
    let mask = split.slice(slice_col);
    let (mut in_hits, mut in_n, mut out_hits, mut out_n) = (0i128, 0i128, 0i128, 0i128);
    for i in 0..split.n() {
        let hit = i128::from(split.labels()[i] == split.predictions()[i]);
        if mask[i] {
            in_hits += hit;
            in_n += 1;
        } else {
            out_hits += hit;
            out_n += 1;
        }
    }
    if in_n == 0 || out_n == 0 {
        return Err(EvalError::EmptyGroup(format!(
            "slice '{}' needs members and non-members",
            split.slice_names()[slice_col]
        )));
    }
    // out/out_n - in/in_n > eps/100, cross-multiplied to stay exact
    let lhs = ((out_hits * in_n - in_hits * out_n) * 100) as f64;
    Ok(lhs > epsilon_pp * (out_n * in_n) as f64)
}

/// Scores that reproduce the ground-truth slice columns exactly.
pub fn identity_scores(split: &LabeledSplit) -> Result<SliceScores<f64>, EvalError> {
    let columns: Vec<Vec<f64>> = split
        .slices()
        .iter()
        .map(|s| s.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
        .collect();
    Ok(SliceScores::from_columns("identity", &columns)?)
}

/// Independent uniform scores, a null discovery method.
pub fn random_scores(n: usize, k_hat: usize, seed: u64) -> Result<SliceScores<f64>, EvalError> {
    let mut rng = stream(seed, &["random-scores"]);
    let values = (0..n * k_hat).map(|_| rng.random::<f64>()).collect();
    Ok(SliceScores::new("random", n, k_hat, values)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub k: usize,
    pub beta: f64,
    /// Degradation threshold in percentage points.
    pub epsilon_pp: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k: 10,
            beta: 0.5,
            epsilon_pp: 10.0,
        }
    }
}

/// Outcome for one ground-truth slice of a setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceOutcome {
    pub name: String,
    /// Maximum over discovered slices.
    pub precision_at_k: f64,
    /// Discovered slice attaining the maximum (lowest index on ties).
    pub best_slice: usize,
    pub degraded: bool,
    pub success_at_beta: bool,
    /// Fraction of test examples in the slice.
    pub prevalence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingResult {
    pub setting_id: String,
    pub method: Method,
    /// Missing when the setting itself could not be loaded.
    pub slice_type: Option<SliceType>,
    pub alpha: Option<f64>,
    pub model_kind: Option<ModelKind>,
    pub slices: Vec<SliceOutcome>,
    /// Mean slice precision; for single-slice settings, that slice's value.
    pub precision_at_k: Option<f64>,
    /// Trained models whose slice does not degrade are not valid settings.
    pub excluded: bool,
    pub fit: serde_json::Value,
    pub error: Option<String>,
    /// Seconds spent fitting and scoring. Kept out of the report so reports
    /// are identical across runs.
    #[serde(skip)]
    pub wall_time: f64,
}

impl SettingResult {
    pub fn failed(id: &str, method: Method, setting: Option<&Setting>, message: String) -> Self {
        Self {
            setting_id: id.to_string(),
            method,
            slice_type: setting.map(|s| s.slice_type),
            alpha: setting.map(|s| s.alpha),
            model_kind: setting.map(|s| s.model_kind),
            slices: Vec::new(),
            precision_at_k: None,
            excluded: false,
            fit: serde_json::Value::Null,
            error: Some(message),
            wall_time: 0.0,
        }
    }

    /// Usable in aggregates.
    pub fn is_valid(&self) -> bool {
        self.error.is_none() && !self.excluded && self.precision_at_k.is_some()
    }
}

/// Per-slice maxima of precision-at-k over the discovered slices.
pub fn score_against_truth(
    scores: &SliceScores<f64>,
    test: &LabeledSplit,
    cfg: &EvalConfig,
) -> Result<Vec<SliceOutcome>, EvalError> {
    if scores.n() != test.n() {
        return Err(EvalError::InvalidInput(format!(
            "{} score rows for {} test examples",
            scores.n(),
            test.n()
        )));
    }
    let columns: Vec<Vec<f64>> = (0..scores.k_hat()).map(|j| scores.column(j)).collect();
    (0..test.num_slices())
        .map(|u| {
            let truth = test.slice(u);
            let mut best = (0usize, f64::NEG_INFINITY);
            for (v, col) in columns.iter().enumerate() {
                let p = precision_at_k(col, truth, cfg.k)?;
                if p > best.1 {
                    best = (v, p);
                }
            }
            let degraded = match check_degradation(test, u, cfg.epsilon_pp) {
                Ok(d) => d,
                Err(EvalError::EmptyGroup(_)) => false,
                Err(e) => return Err(e),
            };
            Ok(SliceOutcome {
                name: test.slice_names()[u].clone(),
                precision_at_k: best.1,
                best_slice: best.0,
                degraded,
                success_at_beta: best.1 > cfg.beta,
                prevalence: truth.iter().filter(|&&b| b).count() as f64 / test.n() as f64,
            })
        })
        .collect()
}

/// Fits `method` on the validation split, scores the test split, and
/// compares against every ground-truth slice. Failures are recorded in the
/// result rather than returned.
pub fn run_setting(
    id: &str,
    setting: &Setting,
    method: Method,
    methods: &MethodsConfig,
    cfg: &EvalConfig,
) -> SettingResult {
    let start = std::time::Instant::now();
    let outcome = (|| -> Result<(Vec<SliceOutcome>, serde_json::Value), EvalError> {
        let (valid_emb, valid_split) = &setting.valid;
        let (test_emb, test_split) = &setting.test;
        let fitted = fit_method(method, methods, valid_emb, valid_split)?;
        let scores = fitted.score(test_emb, test_split)?;
        Ok((
            score_against_truth(&scores, test_split, cfg)?,
            fitted.summary(),
        ))
    })();
    let mut result = match outcome {
        Ok((slices, fit)) => {
            let precision = (!slices.is_empty()).then(|| {
                slices.iter().map(|s| s.precision_at_k).sum::<f64>() / slices.len() as f64
            });
            let excluded = setting.model_kind == ModelKind::TrainedIngested
                && !slices.iter().any(|s| s.degraded);
            if excluded {
                log::warn!("{id}: slice does not degrade under the ingested model; excluded from aggregates");
            }
            SettingResult {
                setting_id: id.to_string(),
                method,
                slice_type: Some(setting.slice_type),
                alpha: Some(setting.alpha),
                model_kind: Some(setting.model_kind),
                slices,
                precision_at_k: precision,
                excluded,
                fit,
                error: None,
                wall_time: 0.0,
            }
        }
        Err(e) => {
            log::error!("{id} / {method}: {e}");
            SettingResult::failed(id, method, Some(setting), e.to_string())
        }
    };
    result.wall_time = start.elapsed().as_secs_f64();
    result
}
