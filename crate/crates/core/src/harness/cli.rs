//! Command-line interface of the `unseen` binary.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::backends::BackendKind;
use crate::error::{Error, Result};
use crate::harness::experiment::{run_experiment, DatasetSource, ExperimentSpec, Normalization, ResultRecord};
use crate::harness::suites::{sweep, sweep_csv, SweepParam};
use crate::unseen::{default_lambdas, CreationUpdate, DcnUpdate, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "unseen", version, about = "Deep clustering with an unknown number of clusters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run repeated experiments on one dataset and write results.
    Run(RunArgs),
    /// Repeat `run` for every value of one parameter.
    Sweep {
        /// k (blob count), t, first-k or k-init.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
}

/// Options of a run. Every field can also come from a JSON file given with
/// `--config`; flags on the command line win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunArgs {
    /// `csv:PATH`, `idx:IMAGES,LABELS` or `blobs:k=K,n=N,d=D,std=S[,seed=X]`.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Label column of a CSV file (default: last).
    #[arg(long)]
    pub label_col: Option<usize>,
    /// Keep only classes 0..K.
    #[arg(long)]
    pub first_k: Option<usize>,
    /// dcn, dec or dkm.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub k_init: Option<usize>,
    /// Dying threshold in [0, 1).
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub pretrain_epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub pretrain_batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub pretrain_lr: Option<f64>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Softmax sharpness of the DKM backend.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Encoder sizes after the input, e.g. 500,500,2000,10.
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<usize>>,
    /// auto, none, feature_wise or channel_wise.
    #[arg(long)]
    pub normalize: Option<String>,
    /// transfer or increment.
    #[arg(long)]
    pub creation_update: Option<String>,
    /// per_batch or per_epoch.
    #[arg(long)]
    pub dcn_update: Option<String>,
    #[arg(long)]
    pub no_nn_loss: bool,
    /// Plain backend with the true number of clusters and no dissolution.
    #[arg(long)]
    pub baseline: bool,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for cached pretrained autoencoders.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub dump_embeddings: bool,
    /// Record 0 seconds so repeated runs produce identical files.
    #[arg(long)]
    pub no_timing: bool,
    /// JSON file with any of these options.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl RunArgs {
    /// Values from `self`, falling back to `file`.
    pub fn merged_over(self, file: RunArgs) -> RunArgs {
        RunArgs {
            dataset: self.dataset.or(file.dataset),
            label_col: self.label_col.or(file.label_col),
            first_k: self.first_k.or(file.first_k),
            backend: self.backend.or(file.backend),
            k_init: self.k_init.or(file.k_init),
            t: self.t.or(file.t),
            epochs: self.epochs.or(file.epochs),
            pretrain_epochs: self.pretrain_epochs.or(file.pretrain_epochs),
            batch_size: self.batch_size.or(file.batch_size),
            pretrain_batch_size: self.pretrain_batch_size.or(file.pretrain_batch_size),
            lr: self.lr.or(file.lr),
            pretrain_lr: self.pretrain_lr.or(file.pretrain_lr),
            lambda1: self.lambda1.or(file.lambda1),
            lambda2: self.lambda2.or(file.lambda2),
            alpha: self.alpha.or(file.alpha),
            layers: self.layers.or(file.layers),
            normalize: self.normalize.or(file.normalize),
            creation_update: self.creation_update.or(file.creation_update),
            dcn_update: self.dcn_update.or(file.dcn_update),
            no_nn_loss: self.no_nn_loss || file.no_nn_loss,
            baseline: self.baseline || file.baseline,
            reps: self.reps.or(file.reps),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
            cache_dir: self.cache_dir.or(file.cache_dir),
            dump_embeddings: self.dump_embeddings || file.dump_embeddings,
            no_timing: self.no_timing || file.no_timing,
            config: self.config,
        }
    }

    /// Reads `--config` (if any) and builds the experiment.
    pub fn into_spec(self) -> Result<ExperimentSpec> {
        let args = match &self.config {
            Some(path) => {
                let file: RunArgs = serde_json::from_str(&fs::read_to_string(path)?)?;
                self.merged_over(file)
            }
            None => self,
        };
        args.build_spec()
    }

    fn build_spec(self) -> Result<ExperimentSpec> {
        let dataset = self
            .dataset
            .ok_or_else(|| Error::InvalidConfig("--dataset is required".into()))?;
        let mut source: DatasetSource = dataset.parse()?;
        if let DatasetSource::Csv { label_col, .. } = &mut source {
            *label_col = self.label_col;
        }
        let backend: BackendKind = self.backend.as_deref().unwrap_or("dkm").parse()?;
        let mut run = RunConfig::for_backend(backend);
        let (l1, l2) = default_lambdas(backend);
        run.lambda1 = self.lambda1.unwrap_or(l1);
        run.lambda2 = self.lambda2.unwrap_or(l2);
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { run.$field = v; } )* };
        }
        set!(k_init, t, epochs, pretrain_epochs, batch_size, pretrain_batch_size, lr, pretrain_lr, alpha, layers, seed);
        if let Some(s) = &self.creation_update {
            run.creation_update = parse_enum::<CreationUpdate>(s)?;
        }
        if let Some(s) = &self.dcn_update {
            run.dcn_update = parse_enum::<DcnUpdate>(s)?;
        }
        run.nn_loss_enabled = !self.no_nn_loss;

        let mut spec = ExperimentSpec::new(source, run);
        spec.first_k = self.first_k;
        if let Some(s) = &self.normalize {
            spec.normalization = parse_enum::<Normalization>(s)?;
        }
        spec.baseline = self.baseline;
        spec.repetitions = self.reps.unwrap_or(1);
        spec.out_dir = self.out;
        spec.cache_dir = self.cache_dir;
        spec.dump_embeddings = self.dump_embeddings;
        spec.record_timing = !self.no_timing;
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_enum<E: for<'de> Deserialize<'de>>(s: &str) -> Result<E> {
    let norm = s.replace('-', "_");
    serde_json::from_value(serde_json::Value::String(norm))
        .map_err(|_| Error::InvalidConfig(format!("unrecognized value {s:?}")))
}

fn summary(r: &ResultRecord) -> String {
    let a = &r.aggregate;
    format!(
        "{} {}: acc {:.4}±{:.4} ari {:.4}±{:.4} nmi {:.4}±{:.4} k {:.2}±{:.2} over {} run(s)",
        r.dataset,
        r.backend,
        a.acc.mean,
        a.acc.std,
        a.ari.mean,
        a.ari.std,
        a.nmi.mean,
        a.nmi.std,
        a.k_pred.mean,
        a.k_pred.std,
        r.repetitions.len()
    )
}

/// Executes a parsed command and returns lines for standard output.
pub fn execute(cli: Cli) -> Result<Vec<String>> {
    match cli.command {
        Command::Run(args) => {
            let record = run_experiment(&args.into_spec()?)?;
            Ok(vec![summary(&record)])
        }
        Command::Sweep { param, values, run } => {
            let param: SweepParam = param.parse()?;
            let spec = run.into_spec()?;
            let points = sweep(&spec, param, &values)?;
            let table = sweep_csv(param, &points);
            if let Some(dir) = &spec.out_dir {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("sweep.csv"), &table)?;
            }
            Ok(table.lines().map(str::to_string).collect())
        }
    }
}
