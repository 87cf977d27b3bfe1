//! The composite batch objective and the dying-clusters training loop.

use serde::{Deserialize, Serialize};

use crate::backends::{init_model, BackendKind, ClusterModel};
use crate::data::batches;
use crate::error::{Error, Result};
use crate::nn::{
    mse_loss, pretrain, AdamState, AutoencoderGrads, AutoencoderParams, ForwardPass, LossGraph,
    PretrainConfig,
};
use crate::scalar::Scalar;
use crate::tensor::Tensor2D;
use crate::unseen::bookkeeping::{detect_dead, dissolve, ClusterBookkeeping};
use crate::unseen::config::{DcnUpdate, RunConfig};
use crate::unseen::neighbors::{compute_l, nn_loss, nn_loss_simul};

/// Values of the individual terms of one batch objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub rec: f64,
    pub clust: f64,
    pub nn: f64,
    pub total: f64,
}

/// Weights and switches for the batch objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub nn_loss_enabled: bool,
}

impl From<&RunConfig> for LossWeights {
    fn from(c: &RunConfig) -> Self {
        Self {
            lambda1: c.effective_lambda1(),
            lambda2: c.lambda2,
            nn_loss_enabled: c.nn_loss_enabled,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchLoss<T> {
    pub graph: LossGraph<T>,
    pub terms: LossTerms,
    pub pass: ForwardPass<T>,
}

/// `lambda1 * L_rec + lambda2 * (L_clust + L_nn)` on one batch.
///
/// The alternating backend uses the plain neighbor loss, the simultaneous
/// ones the pairwise-normalized variant. `l` is clamped to `|B| - 1`.
/// `dec_target` overrides the DEC target distribution (it is otherwise
/// computed from the batch).
pub fn total_loss<T: Scalar>(
    ae: &AutoencoderParams<T>,
    batch: &Tensor2D<T>,
    model: &ClusterModel<T>,
    l: usize,
    weights: &LossWeights,
    dec_target: Option<&Tensor2D<T>>,
) -> Result<BatchLoss<T>> {
    if batch.rows() < 2 {
        return Err(Error::InvalidConfig(format!(
            "batch of {} samples; pairwise losses need 2",
            batch.rows()
        )));
    }
    let with_rec = weights.lambda1 != 0.0;
    let pass = ae.forward(batch, with_rec)?;
    let z = pass.embedding();
    let mut graph = LossGraph::zero(z.rows(), z.cols());
    let mut terms = LossTerms::default();

    if with_rec {
        let (rec, grad) = mse_loss(pass.reconstruction().expect("decoder ran"), batch)?;
        let rec_graph = LossGraph {
            value: rec,
            grad_embedding: Tensor2D::zeros(z.rows(), z.cols()),
            grad_reconstruction: Some(grad),
            grad_centers: None,
        };
        graph.accumulate(&rec_graph, T::of(weights.lambda1))?;
        terms.rec = rec.as_f64();
    }

    let lambda2 = T::of(weights.lambda2);
    let clust = model.clustering_loss_with_target(z, dec_target)?;
    graph.accumulate(&clust, lambda2)?;
    terms.clust = clust.value.as_f64();

    if weights.nn_loss_enabled {
        let l = l.clamp(1, z.rows() - 1);
        let nn = if model.kind.is_simultaneous() {
            nn_loss_simul(z, l)?
        } else {
            nn_loss(z, l)?
        };
        graph.accumulate(&nn, lambda2)?;
        terms.nn = nn.value.as_f64();
    }
    terms.total = graph.value.as_f64();
    Ok(BatchLoss { graph, terms, pass })
}

/// Parameter gradients of a batch objective.
pub fn total_loss_gradients<T: Scalar>(
    ae: &AutoencoderParams<T>,
    loss: &BatchLoss<T>,
) -> Result<AutoencoderGrads<T>> {
    ae.backward(
        &loss.pass,
        &loss.graph.grad_embedding,
        loss.graph.grad_reconstruction.as_ref(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub epoch: usize,
    /// Active clusters after this epoch's dissolution step.
    pub k: usize,
    /// Neighbor count used during this epoch.
    pub l: usize,
    pub losses: LossTerms,
    /// Stable IDs of the clusters dissolved at the end of this epoch.
    pub dead_ids: Vec<usize>,
    pub creation_total: f64,
    pub current_total: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome<T> {
    pub params: AutoencoderParams<T>,
    pub model: ClusterModel<T>,
    pub bookkeeping: ClusterBookkeeping,
    pub labels: Vec<usize>,
    pub traces: Vec<EpochTrace>,
}

impl<T: Scalar> RunOutcome<T> {
    pub fn k_final(&self) -> usize {
        self.model.k()
    }
}

pub fn pretrain_config(cfg: &RunConfig) -> PretrainConfig {
    PretrainConfig {
        epochs: cfg.pretrain_epochs,
        batch_size: cfg.pretrain_batch_size,
        lr: cfg.pretrain_lr,
        seed: cfg.seed,
    }
}

/// Full pipeline: build and pretrain the autoencoder, then cluster.
pub fn run_unseen<T: Scalar>(data: &Tensor2D<T>, cfg: &RunConfig) -> Result<RunOutcome<T>> {
    cfg.validate()?;
    if data.rows() == 0 {
        return Err(Error::EmptyDataset("run_unseen"));
    }
    let ae = AutoencoderParams::new(data.cols(), &cfg.layers, cfg.seed)?;
    let pre = pretrain(ae, data, &pretrain_config(cfg))?;
    run_from_pretrained(pre.params, data, cfg)
}

/// Clustering phase on top of a pretrained autoencoder.
pub fn run_from_pretrained<T: Scalar>(
    mut ae: AutoencoderParams<T>,
    data: &Tensor2D<T>,
    cfg: &RunConfig,
) -> Result<RunOutcome<T>> {
    cfg.validate()?;
    let n = data.rows();
    if n < 2 {
        return Err(Error::InvalidConfig("clustering needs at least 2 samples".into()));
    }
    let embedded = ae.encode_all(data)?;
    let (mut model, init_labels) =
        init_model(cfg.backend, &embedded, cfg.k_init, cfg.seed, cfg.alpha, cfg.nu)?;
    let mut bk = ClusterBookkeeping::from_labels(model.k(), &init_labels)?;
    let weights = LossWeights::from(cfg);
    let mut adam = AdamState::new(cfg.lr);
    let mut center_adam = AdamState::new(cfg.lr);
    let mut traces = Vec::with_capacity(cfg.epochs);
    let mut labels = init_labels;

    for epoch in 1..=cfg.epochs {
        let l = compute_l(cfg.batch_size, model.k());
        let mut sums = LossTerms::default();
        for idx in batches(n, cfg.batch_size, cfg.seed, epoch as u64)? {
            let x = data.select_rows(&idx);
            let loss = total_loss(&ae, &x, &model, l, &weights, None)?;
            let grads = total_loss_gradients(&ae, &loss)?;
            adam.step(&mut ae.param_slices_mut(), &grads.slices())?;
            if model.kind.is_simultaneous() {
                let gc = loss.graph.grad_centers.as_ref().expect("simultaneous backends emit center grads");
                center_adam.step(&mut [model.centers.as_mut_slice()], &[gc.as_slice()])?;
                if !model.centers.is_finite() {
                    return Err(Error::NonFinite("centers"));
                }
            }
            if model.kind == BackendKind::Dcn && cfg.dcn_update == DcnUpdate::PerBatch {
                let z = ae.encode(&x)?;
                let hard = model.hard_assign(&z)?.hard;
                model.epoch_update(&z, &hard)?;
            }
            let w = idx.len() as f64 / n as f64;
            sums.rec += w * loss.terms.rec;
            sums.clust += w * loss.terms.clust;
            sums.nn += w * loss.terms.nn;
            sums.total += w * loss.terms.total;
        }
        if !ae.is_finite() {
            return Err(Error::NonFinite("network parameters"));
        }
        if model.kind == BackendKind::Dcn && cfg.dcn_update == DcnUpdate::PerEpoch {
            let z = ae.encode_all(data)?;
            let hard = model.hard_assign(&z)?.hard;
            model.epoch_update(&z, &hard)?;
        }

        let mut dead_ids = Vec::new();
        if cfg.dissolve_enabled {
            let z = ae.encode_all(data)?;
            labels = model.hard_assign(&z)?.hard;
            bk.refresh_current(&labels)?;
            let dead = detect_dead(&bk, cfg.t);
            if !dead.is_empty() {
                dead_ids = dead.iter().map(|&p| bk.cluster_ids[p]).collect();
                if model.kind.is_simultaneous() {
                    center_adam.remove_rows(model.dim(), &dead);
                }
                labels = dissolve(&mut model, &mut bk, &dead, &z, &labels, cfg.creation_update)?;
            }
        }
        traces.push(EpochTrace {
            epoch,
            k: model.k(),
            l,
            losses: sums,
            dead_ids,
            creation_total: bk.creation_total(),
            current_total: bk.current_total(),
        });
    }
    if cfg.epochs > 0 {
        let z = ae.encode_all(data)?;
        labels = model.hard_assign(&z)?.hard;
        bk.refresh_current(&labels)?;
    }
    Ok(RunOutcome {
        params: ae,
        model,
        bookkeeping: bk,
        labels,
        traces,
    })
}
