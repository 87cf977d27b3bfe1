//! Versioned JSON persistence for autoencoder weights.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::autoencoder::AutoencoderParams;
use crate::nn::layer::{Activation, DenseLayer};
use crate::scalar::Scalar;
use crate::tensor::Tensor2D;

pub const CHECKPOINT_VERSION: u32 = 1;

/// On-disk layout. Layers are listed encoder first, then decoder; weights are
/// `in x out` nested row arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub layer_dims: Vec<usize>,
    pub activations: Vec<Activation>,
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
}

impl Checkpoint {
    pub fn from_params<T: Scalar>(params: &AutoencoderParams<T>) -> Self {
        let layers: Vec<&DenseLayer<T>> = params.encoder.iter().chain(&params.decoder).collect();
        Self {
            version: CHECKPOINT_VERSION,
            layer_dims: params.layer_dims(),
            activations: layers.iter().map(|l| l.activation).collect(),
            weights: layers
                .iter()
                .map(|l| {
                    l.weights
                        .row_iter()
                        .map(|r| r.iter().map(|v| v.as_f64()).collect())
                        .collect()
                })
                .collect(),
            biases: layers
                .iter()
                .map(|l| l.bias.iter().map(|v| v.as_f64()).collect())
                .collect(),
        }
    }

    pub fn into_params<T: Scalar>(&self) -> Result<AutoencoderParams<T>> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointVersion(self.version));
        }
        let n = self.layer_dims.len().saturating_sub(1);
        if n == 0
            || self.activations.len() != 2 * n
            || self.weights.len() != 2 * n
            || self.biases.len() != 2 * n
        {
            return Err(Error::Checkpoint(format!(
                "expected {} layers for dims {:?}",
                2 * n,
                self.layer_dims
            )));
        }
        let mut layers = Vec::with_capacity(2 * n);
        for i in 0..2 * n {
            let rows: Vec<Vec<T>> = self.weights[i]
                .iter()
                .map(|r| r.iter().map(|&v| T::of(v)).collect())
                .collect();
            let w = Tensor2D::from_rows(&rows)?;
            let b = self.biases[i].iter().map(|&v| T::of(v)).collect();
            layers.push(DenseLayer::new(w, b, self.activations[i])?);
        }
        let decoder = layers.split_off(n);
        let params = AutoencoderParams::from_layers(layers, decoder)?;
        if params.layer_dims() != self.layer_dims {
            return Err(Error::Checkpoint(format!(
                "layer_dims {:?} disagree with weights {:?}",
                self.layer_dims,
                params.layer_dims()
            )));
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}
