//! Comparison slice discovery methods. Each one fits on a validation split
//! and emits [`SliceScores`](crate::dataset::SliceScores) for held-out data,
//! so the evaluation harness treats them exactly like the mixture model.

mod confusion;
mod george;
mod kmeans;
mod multiaccuracy;
mod spotlight;

use thiserror::Error;

use crate::dataset::{DataError, LabeledSplit};
use crate::mixture::FitError;

pub use confusion::{confusion_sdm, CONFUSION_ID};
pub use george::{george_fit, GeorgeConfig, GeorgeModel, GEORGE_ID};
pub use kmeans::{kmeans, lloyd, KMeansFit};
pub use multiaccuracy::{
    multiaccuracy_fit, multiaccuracy_target, ridge, MultiaccuracyConfig, MultiaccuracyModel,
    MULTIACC_ID,
};
pub use spotlight::{spotlight_fit, SpotlightConfig, SpotlightModel, SPOTLIGHT_ID};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("class {class} has {points} points, fewer than the {needed} required")]
    TooFewPoints {
        class: usize,
        points: usize,
        needed: usize,
    },
    #[error("method needs a binary task, got {0} classes")]
    NotBinary(usize),
    #[error("method needs prediction probabilities")]
    MissingProbabilities,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("ridge system is singular")]
    Singular,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Per-example loss: cross-entropy of the true class when probabilities are
/// present, otherwise 0/1 loss on hard predictions.
pub fn per_example_losses(split: &LabeledSplit) -> Vec<f64> {
    match split.prediction_probs() {
        Some(probs) => split
            .labels()
            .iter()
            .zip(probs)
            .map(|(&y, p)| -p[y].max(1e-12).ln())
            .collect(),
        None => split
            .labels()
            .iter()
            .zip(split.predictions())
            .map(|(y, yh)| if y == yh { 0.0 } else { 1.0 })
            .collect(),
    }
}

/// Ordinal ranks mapped onto `[0, 1]`: the smallest value gets 0, the largest
/// 1, ties ordered by index.
pub(crate) fn rank_normalize(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n == 1 {
        return vec![1.0];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; n];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = rank as f64 / (n - 1) as f64;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SplitParts;

    #[test]
    fn losses_prefer_probabilities() {
        let probs = vec![vec![0.8, 0.2], vec![0.4, 0.6]];
        let split = LabeledSplit::new(SplitParts {
            num_classes: 2,
            labels: vec![0, 0],
            predictions: vec![],
            prediction_probs: Some(probs),
            slice_names: vec!["s".into()],
            slices: vec![vec![true, false]],
        })
        .unwrap();
        let l = per_example_losses(&split);
        assert!((l[0] + 0.8f64.ln()).abs() < 1e-15);
        assert!((l[1] + 0.4f64.ln()).abs() < 1e-15);
        let hard = split.with_predictions(vec![0, 1], None).unwrap();
        assert_eq!(per_example_losses(&hard), vec![0.0, 1.0]);
    }

    #[test]
    fn ranks_span_the_unit_interval() {
        assert_eq!(rank_normalize(&[3.0, -1.0, 2.0]), vec![1.0, 0.0, 0.5]);
        assert_eq!(rank_normalize(&[5.0]), vec![1.0]);
    }
}
