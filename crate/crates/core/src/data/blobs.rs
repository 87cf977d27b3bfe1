use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{rng_for, STREAM_BLOBS};
use crate::tensor::Tensor2D;

/// Centers are drawn uniformly from `[-CENTER_BOX, CENTER_BOX]^d`.
pub const CENTER_BOX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub k: usize,
    pub std: f64,
    pub seed: u64,
}

/// Isotropic Gaussian blobs of (near) equal size: the first `n mod k` blobs
/// get one extra sample. Samples are grouped by blob.
pub fn make_blobs(spec: &BlobSpec) -> Result<Dataset> {
    if spec.k == 0 || spec.k > spec.n_samples {
        return Err(Error::InvalidConfig(format!(
            "blobs need 1 <= k <= n_samples, got k={} n={}",
            spec.k, spec.n_samples
        )));
    }
    if spec.n_features == 0 || !(spec.std >= 0.0 && spec.std.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "blobs need d >= 1 and finite std >= 0, got d={} std={}",
            spec.n_features, spec.std
        )));
    }
    let mut rng = rng_for(spec.seed, STREAM_BLOBS, 0);
    let d = spec.n_features;
    let centers: Vec<f64> = (0..spec.k * d)
        .map(|_| rng.random_range(-CENTER_BOX..=CENTER_BOX))
        .collect();

    let base = spec.n_samples / spec.k;
    let extra = spec.n_samples % spec.k;
    let mut values = Vec::with_capacity(spec.n_samples * d);
    let mut labels = Vec::with_capacity(spec.n_samples);
    for c in 0..spec.k {
        let size = base + usize::from(c < extra);
        let center = &centers[c * d..(c + 1) * d];
        for _ in 0..size {
            for &m in center {
                let noise: f64 = rng.sample(StandardNormal);
                values.push(m + spec.std * noise);
            }
            labels.push(c);
        }
    }
    Dataset::new(
        Tensor2D::from_vec(spec.n_samples, d, values)?,
        Some(labels),
        format!(
            "blobs(k={},n={},d={},std={})",
            spec.k, spec.n_samples, d, spec.std
        ),
    )
}
