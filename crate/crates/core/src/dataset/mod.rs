//! Data model for embeddings, labels, predictions, and slices, plus the
//! on-disk formats every other module reads and writes.
//!
//! Example ids are dense 0-based integers assigned by file order; row `i` of
//! an [`EmbeddingMatrix`] is the same example as entry `i` of the companion
//! [`LabeledSplit`] and row `i` of any [`SliceScores`].

mod embeddings;
mod labels;
mod scores;
mod setting;
mod split;

use std::path::PathBuf;

use thiserror::Error;

pub use embeddings::{
    load_embeddings, read_emb1, save_embeddings, save_embeddings_csv, write_emb1, EmbeddingMatrix,
    EMB1_MAGIC, EMB1_VERSION,
};
pub use labels::{load_split, read_labels_csv, write_labels_csv};
pub use scores::{
    load_scores, save_scores, RankedPhrase, ScoresDocument, SliceDescription, SliceScores,
};
pub use setting::{ModelKind, SliceSetting, SliceType};
pub use split::{argmax_lower, LabeledSplit, SplitParts};

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("unrecognized column `{0}`")]
    UnknownColumn(String),
    #[error("probability columns must be p_0..p_(C-1) in order, found `{0}`")]
    ProbabilityColumns(String),
    #[error("row {row}: y_hat disagrees with argmax of the probabilities")]
    ArgmaxInconsistent { row: usize },
    #[error("row {row}: probabilities sum to {sum}, expected 1")]
    ProbabilitySum { row: usize, sum: f64 },
    #[error("row {row}: id must equal the 0-based row index")]
    BadId { row: usize },
    #[error("row {row}, column `{column}`: cannot parse `{value}`")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("at least one slice column is required")]
    NoSlices,
    #[error("{0}")]
    Inconsistent(String),
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad magic {found:?}, expected \"EMB1\"")]
    MagicMismatch { found: [u8; 4] },
    #[error("unsupported EMB1 version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated file: expected {expected} bytes, found {actual}")]
    TruncatedFile { expected: u64, actual: u64 },
    #[error("{0} trailing bytes after the declared payload")]
    TrailingData(u64),
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("label file has {labels} rows but embeddings have {embeddings}")]
    RowCountMismatch { labels: usize, embeddings: usize },
    #[error("schema error: {0}")]
    Schema(#[from] SchemaError),
    #[error("row {row}: class {value} out of range for {num_classes} classes")]
    LabelOutOfRange {
        row: usize,
        value: i64,
        num_classes: usize,
    },
    #[error("invalid scores: {0}")]
    InvalidScores(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl DataError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.into(),
            source,
        }
    }
}
