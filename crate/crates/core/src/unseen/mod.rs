//! Cluster-count estimation by dying clusters: neighbor losses, size
//! bookkeeping and the training loop.

pub mod bookkeeping;
pub mod config;
pub mod neighbors;
pub mod train;

pub use bookkeeping::{detect_dead, dissolve, ClusterBookkeeping, CreationUpdate};
pub use config::{default_lambdas, DcnUpdate, RunConfig};
pub use neighbors::{compute_l, neighbor_sets, nn_loss, nn_loss_simul};
pub use train::{
    pretrain_config, run_from_pretrained, run_unseen, total_loss, total_loss_gradients, BatchLoss,
    EpochTrace, LossTerms, LossWeights, RunOutcome,
};
