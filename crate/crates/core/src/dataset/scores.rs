use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::DataError;

/// Per-example membership scores emitted by a slice discovery method,
/// stored row-major as `n x k_hat`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceScores<T> {
    method: String,
    n: usize,
    k_hat: usize,
    scores: Vec<T>,
}

impl<T: Scalar> SliceScores<T> {
    pub fn new(
        method: impl Into<String>,
        n: usize,
        k_hat: usize,
        scores: Vec<T>,
    ) -> Result<Self, DataError> {
        if n == 0 || k_hat == 0 {
            return Err(DataError::InvalidScores(format!(
                "need n >= 1 and k_hat >= 1, got {n}x{k_hat}"
            )));
        }
        if scores.len() != n * k_hat {
            return Err(DataError::InvalidScores(format!(
                "{} scores for {n}x{k_hat}",
                scores.len()
            )));
        }
        if let Some(pos) = scores
            .iter()
            .position(|s| !s.is_finite() || *s < T::zero() || *s > T::one())
        {
            return Err(DataError::InvalidScores(format!(
                "score at row {}, column {} is {} (must lie in [0,1])",
                pos / k_hat,
                pos % k_hat,
                scores[pos]
            )));
        }
        Ok(Self {
            method: method.into(),
            n,
            k_hat,
            scores,
        })
    }

    /// Builds scores from columns (one vector per discovered slice).
    pub fn from_columns(method: impl Into<String>, columns: &[Vec<T>]) -> Result<Self, DataError> {
        let k_hat = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(DataError::InvalidScores("ragged score columns".into()));
        }
        let mut scores = Vec::with_capacity(n * k_hat);
        for i in 0..n {
            scores.extend(columns.iter().map(|c| c[i]));
        }
        Self::new(method, n, k_hat, scores)
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_hat(&self) -> usize {
        self.k_hat
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.scores[i * self.k_hat + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.scores[i * self.k_hat..(i + 1) * self.k_hat]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn values(&self) -> &[T] {
        &self.scores
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPhrase {
    pub phrase: String,
    pub score: f64,
}

/// Ranked natural-language descriptions for one discovered slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceDescription {
    /// Column of the scores matrix being described.
    pub slice: usize,
    pub dominant_class: usize,
    pub phrases: Vec<RankedPhrase>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

/// JSON scores document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresDocument {
    pub method: String,
    pub n: usize,
    pub k_hat: usize,
    pub scores: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_descriptions: Option<Vec<SliceDescription>>,
}

impl ScoresDocument {
    pub fn from_scores<T: Scalar>(scores: &SliceScores<T>) -> Self {
        Self {
            method: scores.method.clone(),
            n: scores.n,
            k_hat: scores.k_hat,
            scores: (0..scores.n)
                .map(|i| scores.row(i).iter().map(|v| v.as_f64()).collect())
                .collect(),
            slice_descriptions: None,
        }
    }

    pub fn to_scores<T: Scalar>(&self) -> Result<SliceScores<T>, DataError> {
        if self.scores.len() != self.n {
            return Err(DataError::InvalidScores(format!(
                "document declares n={} but holds {} rows",
                self.n,
                self.scores.len()
            )));
        }
        if let Some(r) = self.scores.iter().position(|r| r.len() != self.k_hat) {
            return Err(DataError::InvalidScores(format!(
                "row {r} does not have k_hat={} entries",
                self.k_hat
            )));
        }
        SliceScores::new(
            self.method.clone(),
            self.n,
            self.k_hat,
            self.scores.iter().flatten().map(|&v| T::lit(v)).collect(),
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(|e| DataError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        let doc: Self = serde_json::from_str(&text)?;
        // validates shape and range
        doc.to_scores::<f64>()?;
        Ok(doc)
    }
}

pub fn save_scores<T: Scalar>(
    scores: &SliceScores<T>,
    path: impl AsRef<Path>,
) -> Result<(), DataError> {
    ScoresDocument::from_scores(scores).save(path)
}

pub fn load_scores<T: Scalar>(path: impl AsRef<Path>) -> Result<SliceScores<T>, DataError> {
    ScoresDocument::load(path)?.to_scores()
}
