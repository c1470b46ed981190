use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{EmbeddingMatrix, LabeledSplit, SliceScores};
use crate::scalar::Scalar;

use super::em::{e_step, MixtureFit};
use super::pca::ProjectionRecord;
use super::{FitConfig, FitError, MixtureParams};

pub const METHOD_ID: &str = "domino";

/// Frozen-parameter posteriors on held-out data, restricted to the
/// `selected` components. Scores are not renormalized over the subset.
pub fn score<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    split: &LabeledSplit,
    fit: &MixtureFit<T>,
    selected: &[usize],
) -> Result<SliceScores<T>, FitError> {
    let model = ModelView {
        config: &fit.config,
        projection: &fit.projection,
        params: &fit.params,
    };
    model.score(emb, split, selected)
}

struct ModelView<'a, T> {
    config: &'a FitConfig,
    projection: &'a ProjectionRecord<T>,
    params: &'a MixtureParams<T>,
}

impl<T: Scalar> ModelView<'_, T> {
    fn score(
        &self,
        emb: &EmbeddingMatrix<T>,
        split: &LabeledSplit,
        selected: &[usize],
    ) -> Result<SliceScores<T>, FitError> {
        if let Some(&bad) = selected.iter().find(|&&j| j >= self.params.k()) {
            return Err(FitError::InvalidConfig(format!(
                "selected component {bad} out of range for {} components",
                self.params.k()
            )));
        }
        let reduced = self.projection.apply(emb)?;
        let (q, _) = e_step(&reduced, split, self.params, self.config.gamma)?;
        let columns: Vec<Vec<T>> = selected.iter().map(|&j| q.column(j)).collect();
        Ok(SliceScores::from_columns(METHOD_ID, &columns)?)
    }
}

/// Persisted form of a fitted mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub config: FitConfig,
    pub projection: ProjectionRecord<f64>,
    pub params: MixtureParams<f64>,
    pub selected: Vec<usize>,
}

impl ModelDocument {
    pub fn from_fit<T: Scalar>(fit: &MixtureFit<T>) -> Self {
        let cast = |v: &[T]| v.iter().map(|x| x.as_f64()).collect::<Vec<f64>>();
        let cast2 = |m: &[Vec<T>]| m.iter().map(|v| cast(v)).collect::<Vec<_>>();
        let p = &fit.params;
        Self {
            config: fit.config.clone(),
            projection: ProjectionRecord {
                input_dim: fit.projection.input_dim,
                output_dim: fit.projection.output_dim,
                mean: cast(&fit.projection.mean),
                basis: cast(&fit.projection.basis),
                eigenvalues: fit.projection.eigenvalues.clone(),
                rank_deficient: fit.projection.rank_deficient,
            },
            params: MixtureParams {
                p_s: cast(&p.p_s),
                means: cast2(&p.means),
                variances: cast2(&p.variances),
                label_probs: cast2(&p.label_probs),
                pred_probs: cast2(&p.pred_probs),
            },
            selected: fit.selected(),
        }
    }

    pub fn score(
        &self,
        emb: &EmbeddingMatrix<f64>,
        split: &LabeledSplit,
    ) -> Result<SliceScores<f64>, FitError> {
        ModelView {
            config: &self.config,
            projection: &self.projection,
            params: &self.params,
        }
        .score(emb, split, &self.selected)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), FitError> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|source| FitError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FitError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| FitError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let doc: Self = serde_json::from_str(&text)?;
        doc.config.validate()?;
        doc.params.validate(doc.config.cov_floor, 1e-9)?;
        Ok(doc)
    }
}
