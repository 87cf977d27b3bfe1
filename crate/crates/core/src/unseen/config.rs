use serde::{Deserialize, Serialize};

use crate::backends::BackendKind;
use crate::error::{Error, Result};
use crate::unseen::bookkeeping::CreationUpdate;

/// When the DCN centers are moved by the running-average rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DcnUpdate {
    #[default]
    PerBatch,
    PerEpoch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub backend: BackendKind,
    pub k_init: usize,
    /// Dying threshold.
    pub t: f64,
    pub epochs: usize,
    pub pretrain_epochs: usize,
    pub batch_size: usize,
    /// Batch size of autoencoder pretraining.
    pub pretrain_batch_size: usize,
    pub lr: f64,
    pub pretrain_lr: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub nn_loss_enabled: bool,
    /// Dead-cluster detection and dissolution. Off for plain baselines.
    pub dissolve_enabled: bool,
    pub seed: u64,
    /// Encoder sizes after the input layer; the last entry is the embedding size.
    pub layers: Vec<usize>,
    pub alpha: f64,
    pub nu: f64,
    pub dcn_update: DcnUpdate,
    pub creation_update: CreationUpdate,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::for_backend(BackendKind::Dkm)
    }
}

impl RunConfig {
    /// Experiment defaults with backend-specific loss weights.
    pub fn for_backend(backend: BackendKind) -> Self {
        let (lambda1, lambda2) = default_lambdas(backend);
        Self {
            backend,
            k_init: 35,
            t: 0.5,
            epochs: 150,
            pretrain_epochs: 100,
            batch_size: 256,
            pretrain_batch_size: 256,
            lr: 1e-4,
            pretrain_lr: 1e-3,
            lambda1,
            lambda2,
            nn_loss_enabled: true,
            dissolve_enabled: true,
            seed: 0,
            layers: vec![500, 500, 2000, 10],
            alpha: 1000.0,
            nu: 1.0,
            dcn_update: DcnUpdate::PerBatch,
            creation_update: CreationUpdate::Transfer,
        }
    }

    /// Weight on the reconstruction term actually used: DEC ignores it.
    pub fn effective_lambda1(&self) -> f64 {
        if self.backend == BackendKind::Dec {
            0.0
        } else {
            self.lambda1
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.k_init < 1 {
            return bad("k_init must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.t) {
            return bad(format!("dying threshold t={} outside [0, 1)", self.t));
        }
        if self.batch_size < 2 || self.pretrain_batch_size < 2 {
            return bad(format!(
                "batch sizes {} and {} must be >= 2",
                self.batch_size, self.pretrain_batch_size
            ));
        }
        if self.layers.is_empty() || self.layers.contains(&0) {
            return bad(format!("invalid layers {:?}", self.layers));
        }
        for (name, v) in [
            ("lr", self.lr),
            ("pretrain_lr", self.pretrain_lr),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("alpha", self.alpha),
            ("nu", self.nu),
        ] {
            if !v.is_finite() || v < 0.0 {
                return bad(format!("{name}={v} must be finite and >= 0"));
            }
        }
        if self.nu == 0.0 {
            return bad("nu must be > 0".into());
        }
        Ok(())
    }
}

/// `(lambda1, lambda2)` per backend: DCN 1/0.05, DKM 1/1, DEC 0/1.
pub fn default_lambdas(backend: BackendKind) -> (f64, f64) {
    match backend {
        BackendKind::Dcn => (1.0, 0.05),
        BackendKind::Dkm => (1.0, 1.0),
        BackendKind::Dec => (0.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::for_backend(BackendKind::Dcn);
        assert_eq!((c.k_init, c.t, c.epochs, c.batch_size), (35, 0.5, 150, 256));
        assert_eq!((c.lambda1, c.lambda2), (1.0, 0.05));
        assert_eq!(RunConfig::for_backend(BackendKind::Dec).effective_lambda1(), 0.0);
        c.validate().unwrap();
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        c.t = 1.0;
        assert!(c.validate().is_err());
        c.t = 0.0;
        c.validate().unwrap();
        c.batch_size = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_uses_defaults_for_missing_fields() {
        let c: RunConfig = serde_json::from_str(r#"{"backend":"dcn","k_init":12}"#).unwrap();
        assert_eq!(c.k_init, 12);
        assert_eq!(c.backend, BackendKind::Dcn);
        assert_eq!(c.epochs, 150);
    }
}
