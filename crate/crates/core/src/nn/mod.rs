//! Dense autoencoder, exact gradients for its layer stack, Adam, and
//! reconstruction pretraining.

pub mod adam;
pub mod autoencoder;
pub mod checkpoint;
pub mod layer;
pub mod loss;
pub mod pretrain;

pub use adam::AdamState;
pub use autoencoder::{AutoencoderGrads, AutoencoderParams, ForwardPass};
pub use checkpoint::Checkpoint;
pub use layer::{Activation, DenseLayer};
pub use loss::{mse_loss, LossGraph};
pub use pretrain::{pretrain, reconstruction_error, PretrainConfig, PretrainOutcome};
