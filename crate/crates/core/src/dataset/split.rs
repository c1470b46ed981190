use super::{DataError, SchemaError};

const PROB_SUM_TOL: f64 = 1e-6;

/// Index of the largest entry, ties broken toward the lower index.
pub fn argmax_lower(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Raw fields of a [`LabeledSplit`], validated by [`LabeledSplit::new`].
#[derive(Debug, Clone, Default)]
pub struct SplitParts {
    pub num_classes: usize,
    pub labels: Vec<usize>,
    /// Hard predictions. May be empty when `prediction_probs` is given, in
    /// which case they are derived by argmax.
    pub predictions: Vec<usize>,
    pub prediction_probs: Option<Vec<Vec<f64>>>,
    pub slice_names: Vec<String>,
    /// Slice membership, indexed `[slice][example]`.
    pub slices: Vec<Vec<bool>>,
}

/// Labels, predictions, and ground-truth slice membership for one split.
///
/// Construction validates every invariant, so a value of this type is always
/// consistent.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSplit {
    num_classes: usize,
    labels: Vec<usize>,
    predictions: Vec<usize>,
    prediction_probs: Option<Vec<Vec<f64>>>,
    slice_names: Vec<String>,
    slices: Vec<Vec<bool>>,
}

impl LabeledSplit {
    pub fn new(parts: SplitParts) -> Result<Self, DataError> {
        let SplitParts {
            num_classes,
            labels,
            mut predictions,
            prediction_probs,
            slice_names,
            slices,
        } = parts;
        let n = labels.len();
        if n == 0 {
            return Err(DataError::InvalidShape("split has no examples".into()));
        }
        if num_classes < 2 {
            return Err(SchemaError::Inconsistent(format!(
                "need at least 2 classes, got {num_classes}"
            ))
            .into());
        }
        if let Some(probs) = &prediction_probs {
            if probs.len() != n {
                return Err(DataError::InvalidShape(format!(
                    "{} probability rows for {n} examples",
                    probs.len()
                )));
            }
            let derive = predictions.is_empty();
            for (row, p) in probs.iter().enumerate() {
                if p.len() != num_classes {
                    return Err(SchemaError::ProbabilityColumns(format!(
                        "row {row} has {} entries",
                        p.len()
                    ))
                    .into());
                }
                if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(DataError::NonFiniteValue { row, col: 0 });
                }
                let sum: f64 = p.iter().sum();
                if (sum - 1.0).abs() > PROB_SUM_TOL {
                    return Err(SchemaError::ProbabilitySum { row, sum }.into());
                }
                let hard = argmax_lower(p);
                if derive {
                    predictions.push(hard);
                } else if predictions.get(row) != Some(&hard) {
                    return Err(SchemaError::ArgmaxInconsistent { row }.into());
                }
            }
        }
        if predictions.len() != n {
            return Err(DataError::InvalidShape(format!(
                "{} predictions for {n} labels",
                predictions.len()
            )));
        }
        for (row, &v) in labels.iter().chain(predictions.iter()).enumerate() {
            if v >= num_classes {
                return Err(DataError::LabelOutOfRange {
                    row: row % n,
                    value: v as i64,
                    num_classes,
                });
            }
        }
        if slices.is_empty() {
            return Err(SchemaError::NoSlices.into());
        }
        if slice_names.len() != slices.len() {
            return Err(SchemaError::Inconsistent(format!(
                "{} slice names for {} slice columns",
                slice_names.len(),
                slices.len()
            ))
            .into());
        }
        if let Some(col) = slices.iter().position(|s| s.len() != n) {
            return Err(DataError::InvalidShape(format!(
                "slice `{}` has {} rows, expected {n}",
                slice_names[col],
                slices[col].len()
            )));
        }
        Ok(Self {
            num_classes,
            labels,
            predictions,
            prediction_probs,
            slice_names,
            slices,
        })
    }

    pub fn into_parts(self) -> SplitParts {
        SplitParts {
            num_classes: self.num_classes,
            labels: self.labels,
            predictions: self.predictions,
            prediction_probs: self.prediction_probs,
            slice_names: self.slice_names,
            slices: self.slices,
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_slices(&self) -> usize {
        self.slices.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn predictions(&self) -> &[usize] {
        &self.predictions
    }

    pub fn prediction_probs(&self) -> Option<&[Vec<f64>]> {
        self.prediction_probs.as_deref()
    }

    pub fn slice_names(&self) -> &[String] {
        &self.slice_names
    }

    pub fn slice(&self, j: usize) -> &[bool] {
        &self.slices[j]
    }

    pub fn slices(&self) -> &[Vec<bool>] {
        &self.slices
    }

    pub fn slice_index(&self, name: &str) -> Option<usize> {
        self.slice_names.iter().position(|s| s == name)
    }

    /// Replaces predictions (and probabilities), revalidating.
    pub fn with_predictions(
        self,
        predictions: Vec<usize>,
        prediction_probs: Option<Vec<Vec<f64>>>,
    ) -> Result<Self, DataError> {
        let mut parts = self.into_parts();
        parts.predictions = predictions;
        parts.prediction_probs = prediction_probs;
        Self::new(parts)
    }

    pub fn with_labels(self, labels: Vec<usize>) -> Result<Self, DataError> {
        let mut parts = self.into_parts();
        parts.labels = labels;
        Self::new(parts)
    }

    /// Subset of examples in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self, DataError> {
        Self::new(SplitParts {
            num_classes: self.num_classes,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            predictions: indices.iter().map(|&i| self.predictions[i]).collect(),
            prediction_probs: self
                .prediction_probs
                .as_ref()
                .map(|p| indices.iter().map(|&i| p[i].clone()).collect()),
            slice_names: self.slice_names.clone(),
            slices: self
                .slices
                .iter()
                .map(|s| indices.iter().map(|&i| s[i]).collect())
                .collect(),
        })
    }

    /// Fraction of examples whose prediction equals the label, restricted to
    /// `mask == want`. `None` when the group is empty.
    pub fn accuracy_where(&self, mask: &[bool], want: bool) -> Option<f64> {
        let (mut hits, mut total) = (0usize, 0usize);
        for i in 0..self.n() {
            if mask[i] == want {
                total += 1;
                hits += usize::from(self.labels[i] == self.predictions[i]);
            }
        }
        (total > 0).then(|| hits as f64 / total as f64)
    }
}
