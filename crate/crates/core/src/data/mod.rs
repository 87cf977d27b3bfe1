//! Dataset ingestion, synthetic blobs, normalization and batching.

pub mod batch;
pub mod blobs;
pub mod csv;
pub mod idx;
pub mod normalize;

use crate::error::{Error, Result};
use crate::tensor::Tensor2D;

pub use batch::batches;
pub use blobs::{make_blobs, BlobSpec};
pub use self::csv::{field_count, load_csv};
pub use idx::load_idx;
pub use normalize::{z_normalize, NormalizeMode};

/// Feature matrix with optional ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Tensor2D<f64>,
    pub labels: Option<Vec<usize>>,
    pub name: String,
}

impl Dataset {
    pub fn new(features: Tensor2D<f64>, labels: Option<Vec<usize>>, name: impl Into<String>) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::EmptyDataset("Dataset::new"));
        }
        if let Some(l) = &labels {
            if l.len() != features.rows() {
                return Err(Error::LabelLength(features.rows(), l.len()));
            }
        }
        Ok(Self {
            features,
            labels,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Number of distinct ground-truth classes, if labeled.
    pub fn n_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |m| m + 1))
    }

    /// Keeps only samples whose label is below `k`.
    pub fn subset_first_k(&self, k: usize) -> Result<Dataset> {
        let labels = self.labels.as_ref().ok_or(Error::Unlabeled)?;
        let keep: Vec<usize> = (0..self.len()).filter(|&i| labels[i] < k).collect();
        if keep.len() == self.len() {
            return Ok(self.clone());
        }
        Dataset::new(
            self.features.select_rows(&keep),
            Some(keep.iter().map(|&i| labels[i]).collect()),
            format!("{}[first {k}]", self.name),
        )
    }
}
