use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: expected {expected} columns, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("{context}: shape {left:?} does not match {right:?}")]
    ShapeMismatch {
        context: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{0}: dataset is empty")]
    EmptyDataset(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: line {line}: {message}")]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: IDX format error: {message}")]
    Idx { path: PathBuf, message: String },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("neighbor count {l} out of range for batch of {batch}")]
    NeighborCount { l: usize, batch: usize },

    #[error("cannot remove all {0} clusters")]
    NoSurvivor(usize),

    #[error("cluster index {index} out of range for {k} clusters")]
    ClusterIndex { index: usize, k: usize },

    #[error("operation requires the alternating (DCN) backend")]
    NotAlternating,

    #[error("label length mismatch: {0} vs {1}")]
    LabelLength(usize, usize),

    #[error("dataset has no labels")]
    Unlabeled,

    #[error("unsupported checkpoint version {0}")]
    CheckpointVersion(u32),

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
