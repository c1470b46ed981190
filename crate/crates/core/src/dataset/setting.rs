use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::labels::load_split_with_classes;
use super::{
    save_embeddings, write_labels_csv, DataError, EmbeddingMatrix, LabeledSplit, SchemaError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceType {
    Rare,
    Correlation,
    NoisyLabel,
}

impl SliceType {
    /// Legal slice-strength interval `(low, high, inclusive)`.
    pub fn alpha_range(self) -> (f64, f64, bool) {
        match self {
            SliceType::Rare => (0.01, 0.1, false),
            SliceType::Correlation => (0.2, 0.8, true),
            SliceType::NoisyLabel => (0.01, 0.3, false),
        }
    }

    pub fn alpha_is_legal(self, alpha: f64) -> bool {
        let (lo, hi, inclusive) = self.alpha_range();
        if inclusive {
            (lo..=hi).contains(&alpha)
        } else {
            alpha > lo && alpha < hi
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SliceType::Rare => "rare",
            SliceType::Correlation => "correlation",
            SliceType::NoisyLabel => "noisy_label",
        }
    }
}

impl std::fmt::Display for SliceType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SliceType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rare" => Ok(SliceType::Rare),
            "correlation" => Ok(SliceType::Correlation),
            "noisy_label" | "noisy" => Ok(SliceType::NoisyLabel),
            _ => Err(format!("unknown slice type `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    TrainedIngested,
    Synthetic,
}

/// One benchmark instance: validation and test splits plus metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSetting<T> {
    pub valid: (EmbeddingMatrix<T>, LabeledSplit),
    pub test: (EmbeddingMatrix<T>, LabeledSplit),
    pub slice_type: SliceType,
    pub alpha: f64,
    pub model_kind: ModelKind,
    pub seed: u64,
    pub provenance: serde_json::Value,
}

#[derive(Debug, Serialize, Deserialize)]
struct SettingMeta {
    slice_type: SliceType,
    alpha: f64,
    model_kind: ModelKind,
    seed: u64,
    d: usize,
    num_classes: usize,
    slice_names: Vec<String>,
    n_valid: usize,
    n_test: usize,
    provenance: serde_json::Value,
}

impl<T: Scalar> SliceSetting<T> {
    /// Checks the cross-split invariants.
    pub fn new(
        valid: (EmbeddingMatrix<T>, LabeledSplit),
        test: (EmbeddingMatrix<T>, LabeledSplit),
        slice_type: SliceType,
        alpha: f64,
        model_kind: ModelKind,
        seed: u64,
        provenance: serde_json::Value,
    ) -> Result<Self, DataError> {
        for (emb, split) in [&valid, &test] {
            if emb.n() != split.n() {
                return Err(DataError::RowCountMismatch {
                    labels: split.n(),
                    embeddings: emb.n(),
                });
            }
        }
        if valid.0.d() != test.0.d()
            || valid.1.num_classes() != test.1.num_classes()
            || valid.1.slice_names() != test.1.slice_names()
        {
            return Err(SchemaError::Inconsistent(
                "valid and test must share d, class count, and slice names".into(),
            )
            .into());
        }
        if !slice_type.alpha_is_legal(alpha) {
            let (lo, hi, _) = slice_type.alpha_range();
            return Err(SchemaError::Inconsistent(format!(
                "alpha {alpha} outside the {slice_type} range ({lo}, {hi})"
            ))
            .into());
        }
        Ok(Self {
            valid,
            test,
            slice_type,
            alpha,
            model_kind,
            seed,
            provenance,
        })
    }

    /// Writes `valid.emb`, `valid.csv`, `test.emb`, `test.csv`, `setting.json`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), DataError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| DataError::io(dir, e))?;
        save_embeddings(&self.valid.0, dir.join("valid.emb"))?;
        write_labels_csv(&self.valid.1, dir.join("valid.csv"))?;
        save_embeddings(&self.test.0, dir.join("test.emb"))?;
        write_labels_csv(&self.test.1, dir.join("test.csv"))?;
        let meta = SettingMeta {
            slice_type: self.slice_type,
            alpha: self.alpha,
            model_kind: self.model_kind,
            seed: self.seed,
            d: self.valid.0.d(),
            num_classes: self.valid.1.num_classes(),
            slice_names: self.valid.1.slice_names().to_vec(),
            n_valid: self.valid.1.n(),
            n_test: self.test.1.n(),
            provenance: self.provenance.clone(),
        };
        let path = dir.join("setting.json");
        let mut text = serde_json::to_string_pretty(&meta)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| DataError::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, DataError> {
        let dir = dir.as_ref();
        let path = dir.join("setting.json");
        let text = fs::read_to_string(&path).map_err(|e| DataError::io(&path, e))?;
        let meta: SettingMeta = serde_json::from_str(&text)?;
        let valid = load_split_with_classes(
            dir.join("valid.csv"),
            dir.join("valid.emb"),
            Some(meta.num_classes),
        )?;
        let test = load_split_with_classes(
            dir.join("test.csv"),
            dir.join("test.emb"),
            Some(meta.num_classes),
        )?;
        if valid.1.slice_names() != meta.slice_names.as_slice() || valid.0.d() != meta.d {
            return Err(SchemaError::Inconsistent(format!(
                "{} disagrees with the split files",
                path.display()
            ))
            .into());
        }
        Self::new(
            valid,
            test,
            meta.slice_type,
            meta.alpha,
            meta.model_kind,
            meta.seed,
            meta.provenance,
        )
    }
}
