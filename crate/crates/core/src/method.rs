//! Uniform fit-then-score interface over every slice discovery method.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::baselines::{
    confusion_sdm, george_fit, multiaccuracy_fit, per_example_losses, spotlight_fit, BaselineError,
    GeorgeConfig, GeorgeModel, MultiaccuracyConfig, MultiaccuracyModel, SpotlightConfig,
    SpotlightModel,
};
use crate::dataset::{EmbeddingMatrix, LabeledSplit, SliceScores};
use crate::mixture::{fit, score, FitConfig, FitError, MixtureFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Domino,
    Confusion,
    Spotlight,
    Multiacc,
    George,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Domino,
        Method::Confusion,
        Method::Spotlight,
        Method::Multiacc,
        Method::George,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Domino => "domino",
            Method::Confusion => "confusion",
            Method::Spotlight => "spotlight",
            Method::Multiacc => "multiacc",
            Method::George => "george",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownMethod(pub String);

impl fmt::Display for UnknownMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let valid: Vec<&str> = Method::ALL.iter().map(|m| m.as_str()).collect();
        write!(
            f,
            "unknown method '{}' (valid: {})",
            self.0,
            valid.join(", ")
        )
    }
}

impl std::error::Error for UnknownMethod {}

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

/// Per-method hyperparameters, the `methods` object of a run config.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodsConfig {
    pub domino: FitConfig,
    pub spotlight: SpotlightConfig,
    pub multiacc: MultiaccuracyConfig,
    pub george: GeorgeConfig,
}

impl MethodsConfig {
    /// Copy with every method seed replaced by `seed`.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.domino.seed = seed;
        c.spotlight.seed = seed;
        c.multiacc.seed = seed;
        c.george.seed = seed;
        c
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MethodError {
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

/// A method fitted on a validation split, ready to score held-out data.
#[derive(Debug, Clone)]
pub enum FittedMethod {
    Domino(Box<MixtureFit<f64>>),
    Confusion,
    Spotlight(SpotlightModel),
    Multiacc(MultiaccuracyModel),
    George(GeorgeModel),
}

/// Fits `method` on validation data only.
pub fn fit_method(
    method: Method,
    cfg: &MethodsConfig,
    emb: &EmbeddingMatrix<f64>,
    split: &LabeledSplit,
) -> Result<FittedMethod, MethodError> {
    Ok(match method {
        Method::Domino => FittedMethod::Domino(Box::new(fit(emb, split, &cfg.domino)?)),
        Method::Confusion => FittedMethod::Confusion,
        Method::Spotlight => {
            let losses = per_example_losses(split);
            FittedMethod::Spotlight(spotlight_fit(emb, &losses, &cfg.spotlight)?)
        }
        Method::Multiacc => FittedMethod::Multiacc(multiaccuracy_fit(emb, split, &cfg.multiacc)?),
        Method::George => FittedMethod::George(george_fit(emb, split, &cfg.george)?),
    })
}

impl FittedMethod {
    pub fn method(&self) -> Method {
        match self {
            FittedMethod::Domino(_) => Method::Domino,
            FittedMethod::Confusion => Method::Confusion,
            FittedMethod::Spotlight(_) => Method::Spotlight,
            FittedMethod::Multiacc(_) => Method::Multiacc,
            FittedMethod::George(_) => Method::George,
        }
    }

    pub fn score(
        &self,
        emb: &EmbeddingMatrix<f64>,
        split: &LabeledSplit,
    ) -> Result<SliceScores<f64>, MethodError> {
        Ok(match self {
            FittedMethod::Domino(f) => score(emb, split, f, &f.selected())?,
            FittedMethod::Confusion => confusion_sdm(split)?,
            FittedMethod::Spotlight(m) => m.score(emb)?,
            FittedMethod::Multiacc(m) => m.score(emb)?,
            FittedMethod::George(m) => m.score(emb, split)?,
        })
    }

    /// Fit summary for reports. Contains no timing information.
    pub fn summary(&self) -> serde_json::Value {
        match self {
            FittedMethod::Domino(f) => json!({
                "iterations": f.diagnostics.iterations,
                "converged": f.diagnostics.converged,
                "final_log_likelihood": f.diagnostics.log_likelihoods.last(),
                "rescued": f.diagnostics.rescued.len(),
                "selected": f.selected(),
            }),
            FittedMethod::Confusion => json!({}),
            FittedMethod::Spotlight(m) => {
                json!({ "objectives": m.objectives, "degenerate": m.degenerate })
            }
            FittedMethod::Multiacc(m) => json!({
                "heldout_correlation": m.heldout_correlation,
                "clamped": m.clamped,
            }),
            FittedMethod::George(m) => json!({ "clusters_per_class": m.clusters_per_class() }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        let err = "umap".parse::<Method>().unwrap_err().to_string();
        assert!(err.contains("domino, confusion, spotlight, multiacc, george"));
    }

    #[test]
    fn methods_section_accepts_partial_json() {
        let c: MethodsConfig = serde_json::from_str(r#"{"domino": {"gamma": 3.0}}"#).unwrap();
        assert_eq!(c.domino.gamma, 3.0);
        assert_eq!(c.domino.k_bar, 25);
        assert_eq!(c.spotlight, SpotlightConfig::default());
    }
}
