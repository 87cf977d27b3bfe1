//! Parameter sweeps built from repeated experiments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::experiment::{run_experiment, DatasetSource, ExperimentSpec, ResultRecord};

/// The quantity varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Number of generated blobs (blob sources only).
    BlobK,
    /// Dying threshold.
    T,
    /// Keep only the first `k` classes.
    FirstK,
    KInit,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k" | "blob-k" => Ok(SweepParam::BlobK),
            "t" => Ok(SweepParam::T),
            "first-k" => Ok(SweepParam::FirstK),
            "k-init" => Ok(SweepParam::KInit),
            _ => Err(Error::InvalidConfig(format!("unknown sweep parameter {s:?}"))),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::BlobK => "k",
            SweepParam::T => "t",
            SweepParam::FirstK => "first-k",
            SweepParam::KInit => "k-init",
        })
    }
}

fn as_count(v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidConfig(format!("{v} is not a count")))
    }
}

/// `base` with `param` set to `value`.
pub fn with_param(base: &ExperimentSpec, param: SweepParam, value: f64) -> Result<ExperimentSpec> {
    let mut spec = base.clone();
    match param {
        SweepParam::T => spec.run.t = value,
        SweepParam::KInit => spec.run.k_init = as_count(value)?,
        SweepParam::FirstK => spec.first_k = Some(as_count(value)?),
        SweepParam::BlobK => match &mut spec.source {
            DatasetSource::Blobs { k, .. } => *k = as_count(value)?,
            _ => return Err(Error::InvalidConfig("k sweeps need a blob source".into())),
        },
    }
    if let Some(dir) = &base.out_dir {
        spec.out_dir = Some(dir.join(format!("{param}_{value}")));
    }
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub record: ResultRecord,
}

pub fn sweep(base: &ExperimentSpec, param: SweepParam, values: &[f64]) -> Result<Vec<SweepPoint>> {
    values
        .iter()
        .map(|&value| {
            let record = run_experiment(&with_param(base, param, value)?)?;
            Ok(SweepPoint { value, record })
        })
        .collect()
}

/// One aggregate row per sweep point.
pub fn sweep_csv(param: SweepParam, points: &[SweepPoint]) -> String {
    let mut out = format!("{param},acc_mean,acc_std,ari_mean,ari_std,nmi_mean,nmi_std,k_pred_mean,k_pred_std\n");
    for p in points {
        let a = &p.record.aggregate;
        out.push_str(&format!(
            "{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
            p.value, a.acc.mean, a.acc.std, a.ari.mean, a.ari.std, a.nmi.mean, a.nmi.std, a.k_pred.mean, a.k_pred.std
        ));
    }
    out
}

/// The same experiment with and without the neighbor loss.
pub fn nn_loss_ablation(base: &ExperimentSpec) -> Result<(ResultRecord, ResultRecord)> {
    let mut with = base.clone();
    with.run.nn_loss_enabled = true;
    let mut without = base.clone();
    without.run.nn_loss_enabled = false;
    if let Some(dir) = &base.out_dir {
        with.out_dir = Some(dir.join("with_nn"));
        without.out_dir = Some(dir.join("without_nn"));
    }
    Ok((run_experiment(&with)?, run_experiment(&without)?))
}
