use crate::data::batch::batches_on_stream;
use crate::error::{Error, Result};
use crate::nn::adam::AdamState;
use crate::nn::autoencoder::AutoencoderParams;
use crate::nn::loss::mse_loss;
use crate::rng::STREAM_PRETRAIN_BATCHES;
use crate::scalar::Scalar;
use crate::tensor::Tensor2D;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 256,
            lr: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PretrainOutcome<T> {
    pub params: AutoencoderParams<T>,
    /// Sample-weighted mean batch MSE per epoch.
    pub loss_history: Vec<f64>,
}

/// Trains the autoencoder on reconstruction MSE for a fixed number of epochs.
pub fn pretrain<T: Scalar>(
    mut params: AutoencoderParams<T>,
    data: &Tensor2D<T>,
    cfg: &PretrainConfig,
) -> Result<PretrainOutcome<T>> {
    if data.rows() == 0 {
        return Err(Error::EmptyDataset("pretrain"));
    }
    let mut adam = AdamState::new(cfg.lr);
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let order = batches_on_stream(
            data.rows(),
            cfg.batch_size,
            cfg.seed,
            STREAM_PRETRAIN_BATCHES,
            epoch as u64,
        )?;
        let mut total = 0.0;
        for idx in &order {
            let x = data.select_rows(idx);
            let pass = params.forward(&x, true)?;
            let (loss, grad_r) = mse_loss(pass.reconstruction().expect("decoder ran"), &x)?;
            let grad_z = Tensor2D::zeros(x.rows(), params.embed_dim());
            let grads = params.backward(&pass, &grad_z, Some(&grad_r))?;
            adam.step(&mut params.param_slices_mut(), &grads.slices())?;
            total += loss.as_f64() * idx.len() as f64;
        }
        if !params.is_finite() {
            return Err(Error::NonFinite("pretrained parameters"));
        }
        loss_history.push(total / data.rows() as f64);
    }
    Ok(PretrainOutcome {
        params,
        loss_history,
    })
}

/// Full-data reconstruction MSE.
pub fn reconstruction_error<T: Scalar>(params: &AutoencoderParams<T>, data: &Tensor2D<T>) -> Result<T> {
    let z = params.encode_all(data)?;
    let r = params.decode(&z)?;
    Ok(mse_loss(&r, data)?.0)
}
