//! Deep clustering with an unknown number of clusters.
//!
//! A pretrained autoencoder is clustered by a centroid-based objective
//! (DCN, DEC or DKM style) that starts from an upper bound on the number
//! of clusters. Clusters that shrink below a fraction of their creation
//! size are dissolved after each epoch, and an in-batch nearest-neighbor
//! loss pulls neighboring clusters together so that redundant ones die.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the 64-bit precision used by the experiments.

pub mod backends;
pub mod data;
pub mod error;
pub mod harness;
pub mod kmeans;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod scalar;
pub mod tensor;
pub mod unseen;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::Tensor2D;

pub type Matrix = tensor::Tensor2D<f64>;
pub type Autoencoder = nn::AutoencoderParams<f64>;
pub type Model = backends::ClusterModel<f64>;
pub type Outcome = unseen::RunOutcome<f64>;

pub type Matrix32 = tensor::Tensor2D<f32>;
pub type Autoencoder32 = nn::AutoencoderParams<f32>;
pub type Model32 = backends::ClusterModel<f32>;
