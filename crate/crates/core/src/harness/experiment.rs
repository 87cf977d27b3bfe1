//! Repeated, seeded experiment runs and their result records.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{field_count, load_csv, load_idx, make_blobs, z_normalize, BlobSpec, Dataset, NormalizeMode};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricsReport};
use crate::nn::{pretrain, AutoencoderParams, Checkpoint};
use crate::tensor::Tensor2D;
use crate::unseen::{pretrain_config, run_from_pretrained, EpochTrace, RunConfig};

/// Where the samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSource {
    /// Labels come from `label_col`, or the last column when unset.
    Csv {
        path: PathBuf,
        label_col: Option<usize>,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
    },
    /// Synthetic blobs. Without a fixed `seed` every repetition draws a
    /// fresh dataset from its own seed.
    Blobs {
        k: usize,
        n: usize,
        d: usize,
        std: f64,
        seed: Option<u64>,
    },
}

impl FromStr for DatasetSource {
    type Err = Error;

    /// `csv:PATH`, `idx:IMAGES,LABELS` or `blobs:k=K,n=N,d=D,std=S[,seed=X]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse dataset {s:?}"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "csv" => Ok(DatasetSource::Csv {
                path: rest.into(),
                label_col: None,
            }),
            "idx" => {
                let (img, lbl) = rest.split_once(',').ok_or_else(bad)?;
                Ok(DatasetSource::Idx {
                    images: img.into(),
                    labels: lbl.into(),
                })
            }
            "blobs" => {
                let (mut k, mut n, mut d, mut std, mut seed) = (None, None, None, None, None);
                for kv in rest.split(',') {
                    let (key, val) = kv.split_once('=').ok_or_else(bad)?;
                    let val = val.trim();
                    match key.trim() {
                        "k" => k = Some(val.parse().map_err(|_| bad())?),
                        "n" => n = Some(val.parse().map_err(|_| bad())?),
                        "d" => d = Some(val.parse().map_err(|_| bad())?),
                        "std" => std = Some(val.parse().map_err(|_| bad())?),
                        "seed" => seed = Some(val.parse().map_err(|_| bad())?),
                        _ => return Err(bad()),
                    }
                }
                Ok(DatasetSource::Blobs {
                    k: k.ok_or_else(bad)?,
                    n: n.ok_or_else(bad)?,
                    d: d.ok_or_else(bad)?,
                    std: std.unwrap_or(1.0),
                    seed,
                })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::Csv { path, .. } => write!(f, "csv:{}", path.display()),
            DatasetSource::Idx { images, labels } => {
                write!(f, "idx:{},{}", images.display(), labels.display())
            }
            DatasetSource::Blobs { k, n, d, std, seed } => {
                write!(f, "blobs:k={k},n={n},d={d},std={std}")?;
                if let Some(s) = seed {
                    write!(f, ",seed={s}")?;
                }
                Ok(())
            }
        }
    }
}

impl DatasetSource {
    fn per_seed(&self) -> bool {
        matches!(self, DatasetSource::Blobs { seed: None, .. })
    }

    /// Image sources normalize over all pixels, everything else per feature.
    pub fn default_normalization(&self) -> NormalizeMode {
        match self {
            DatasetSource::Idx { .. } => NormalizeMode::ChannelWise,
            _ => NormalizeMode::FeatureWise,
        }
    }

    pub fn load(&self, seed: u64) -> Result<Dataset> {
        match self {
            DatasetSource::Csv { path, label_col: Some(c) } => load_csv(path, Some(*c)),
            DatasetSource::Csv { path, label_col: None } => {
                let width = field_count(path)?;
                if width < 2 {
                    return Err(Error::InvalidConfig(format!(
                        "{} has no column left for features",
                        path.display()
                    )));
                }
                load_csv(path, Some(width - 1))
            }
            DatasetSource::Idx { images, labels } => load_idx(images, labels),
            DatasetSource::Blobs { k, n, d, std, seed: fixed } => make_blobs(&BlobSpec {
                n_samples: *n,
                n_features: *d,
                k: *k,
                std: *std,
                seed: fixed.unwrap_or(seed),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Auto,
    None,
    FeatureWise,
    ChannelWise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub source: DatasetSource,
    /// Keep only classes `0..first_k`.
    pub first_k: Option<usize>,
    pub normalization: Normalization,
    /// Seed of the first repetition; later ones use `seed + r`.
    pub run: RunConfig,
    /// Plain backend with the ground-truth number of clusters.
    pub baseline: bool,
    pub repetitions: usize,
    pub out_dir: Option<PathBuf>,
    /// Pretrained checkpoints are cached here when set.
    pub cache_dir: Option<PathBuf>,
    pub dump_embeddings: bool,
    /// When false, wall-clock seconds are recorded as 0 so output files are
    /// byte-for-byte reproducible.
    pub record_timing: bool,
}

impl ExperimentSpec {
    pub fn new(source: DatasetSource, run: RunConfig) -> Self {
        Self {
            source,
            first_k: None,
            normalization: Normalization::Auto,
            run,
            baseline: false,
            repetitions: 1,
            out_dir: None,
            cache_dir: None,
            dump_embeddings: false,
            record_timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
        }
        self.run.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and population standard deviation.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRecord {
    pub seed: u64,
    pub metrics: MetricsReport,
    pub k_pred: usize,
    pub seconds: f64,
    pub traces: Vec<EpochTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub acc: MeanStd,
    pub ari: MeanStd,
    pub nmi: MeanStd,
    pub k_pred: MeanStd,
    pub seconds: MeanStd,
}

impl Aggregate {
    pub fn from_repetitions(reps: &[RepetitionRecord]) -> Self {
        let col = |f: &dyn Fn(&RepetitionRecord) -> f64| -> MeanStd {
            MeanStd::of(&reps.iter().map(f).collect::<Vec<_>>())
        };
        Self {
            acc: col(&|r| r.metrics.acc),
            ari: col(&|r| r.metrics.ari),
            nmi: col(&|r| r.metrics.nmi),
            k_pred: col(&|r| r.k_pred as f64),
            seconds: col(&|r| r.seconds),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub dataset: String,
    pub backend: String,
    pub baseline: bool,
    pub config: RunConfig,
    pub repetitions: Vec<RepetitionRecord>,
    pub aggregate: Aggregate,
}

/// Loaded, normalized and filtered dataset for one seed.
pub fn prepare_dataset(spec: &ExperimentSpec, seed: u64) -> Result<Dataset> {
    let mut ds = spec.source.load(seed)?;
    let mode = match spec.normalization {
        Normalization::Auto => Some(spec.source.default_normalization()),
        Normalization::None => None,
        Normalization::FeatureWise => Some(NormalizeMode::FeatureWise),
        Normalization::ChannelWise => Some(NormalizeMode::ChannelWise),
    };
    if let Some(mode) = mode {
        ds = z_normalize(&ds, mode);
    }
    if let Some(k) = spec.first_k {
        ds = ds.subset_first_k(k)?;
    }
    Ok(ds)
}

fn cache_key(data: &Tensor2D<f64>, cfg: &RunConfig) -> String {
    let mut h = Sha256::new();
    h.update((data.rows() as u64).to_le_bytes());
    h.update((data.cols() as u64).to_le_bytes());
    for v in data.as_slice() {
        h.update(v.to_le_bytes());
    }
    for l in &cfg.layers {
        h.update((*l as u64).to_le_bytes());
    }
    h.update(cfg.seed.to_le_bytes());
    h.update((cfg.pretrain_epochs as u64).to_le_bytes());
    h.update((cfg.pretrain_batch_size as u64).to_le_bytes());
    h.update(cfg.pretrain_lr.to_le_bytes());
    let digest = h.finalize();
    digest.iter().take(12).map(|b| format!("{b:02x}")).collect()
}

/// Pretrained autoencoder for `(data, architecture, seed, pretraining)`,
/// loaded from `cache_dir` when present and stored there otherwise.
pub fn pretrained_autoencoder(
    data: &Tensor2D<f64>,
    cfg: &RunConfig,
    cache_dir: Option<&Path>,
) -> Result<AutoencoderParams<f64>> {
    let path = cache_dir.map(|d| d.join(format!("ae_{}.json", cache_key(data, cfg))));
    if let Some(p) = &path {
        if p.exists() {
            return Checkpoint::load(p)?.into_params();
        }
    }
    let ae = AutoencoderParams::new(data.cols(), &cfg.layers, cfg.seed)?;
    let params = pretrain(ae, data, &pretrain_config(cfg))?.params;
    if let Some(p) = &path {
        Checkpoint::from_params(&params).save(p)?;
    }
    Ok(params)
}

/// Runs every repetition of `spec` and writes results when `out_dir` is set.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultRecord> {
    spec.validate()?;
    let mut shared: Option<Dataset> = None;
    let mut reps = Vec::with_capacity(spec.repetitions);
    let mut dataset_name = String::new();
    for r in 0..spec.repetitions {
        let seed = spec.run.seed + r as u64;
        let ds = if spec.source.per_seed() {
            prepare_dataset(spec, seed)?
        } else {
            if shared.is_none() {
                shared = Some(prepare_dataset(spec, seed)?);
            }
            shared.clone().expect("just loaded")
        };
        dataset_name = ds.name.clone();
        let truth = ds.labels.clone().ok_or(Error::Unlabeled)?;

        let mut cfg = spec.run.clone();
        cfg.seed = seed;
        if spec.baseline {
            cfg.k_init = ds.n_classes().unwrap_or(1).max(1);
            cfg.nn_loss_enabled = false;
            cfg.dissolve_enabled = false;
        }
        let start = Instant::now();
        let ae = pretrained_autoencoder(&ds.features, &cfg, spec.cache_dir.as_deref())?;
        let outcome = run_from_pretrained(ae, &ds.features, &cfg)?;
        let seconds = if spec.record_timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        let metrics = evaluate(&truth, &outcome.labels)?;
        if spec.dump_embeddings {
            if let Some(dir) = &spec.out_dir {
                let z = outcome.params.encode_all(&ds.features)?;
                dump_embedding(&dir.join(format!("embedding_seed{seed}.csv")), &z, &outcome.labels, &truth)?;
            }
        }
        reps.push(RepetitionRecord {
            seed,
            metrics,
            k_pred: outcome.k_final(),
            seconds,
            traces: outcome.traces,
        });
    }
    let record = ResultRecord {
        dataset: dataset_name,
        backend: spec.run.backend.name().to_string(),
        baseline: spec.baseline,
        config: spec.run.clone(),
        aggregate: Aggregate::from_repetitions(&reps),
        repetitions: reps,
    };
    if let Some(dir) = &spec.out_dir {
        emit_results(&record, dir, &[OutputFormat::Json, OutputFormat::Csv])?;
    }
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

pub const CSV_HEADER: &str = "dataset,backend,seed,acc,ari,nmi,k_pred,seconds";

/// Writes `results.json` and/or `results.csv` into `dir`.
pub fn emit_results(record: &ResultRecord, dir: &Path, formats: &[OutputFormat]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for f in formats {
        match f {
            OutputFormat::Json => {
                let p = dir.join("results.json");
                fs::write(&p, serde_json::to_string_pretty(record)?)?;
                written.push(p);
            }
            OutputFormat::Csv => {
                let p = dir.join("results.csv");
                fs::write(&p, results_csv(record))?;
                written.push(p);
            }
        }
    }
    Ok(written)
}

/// One row per repetition plus an aggregate (mean) row.
pub fn results_csv(record: &ResultRecord) -> String {
    let name = record.dataset.replace(',', ";");
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &record.repetitions {
        out.push_str(&format!(
            "{name},{},{},{:.4},{:.4},{:.4},{},{:.3}\n",
            record.backend, r.seed, r.metrics.acc, r.metrics.ari, r.metrics.nmi, r.k_pred, r.seconds
        ));
    }
    let a = &record.aggregate;
    out.push_str(&format!(
        "{name},{},mean,{:.4},{:.4},{:.4},{:.4},{:.3}\n",
        record.backend, a.acc.mean, a.ari.mean, a.nmi.mean, a.k_pred.mean, a.seconds.mean
    ));
    out
}

fn dump_embedding(path: &Path, z: &Tensor2D<f64>, labels: &[usize], truth: &[usize]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    let header: Vec<String> = (0..z.cols()).map(|i| format!("z{i}")).collect();
    writeln!(f, "{},cluster,label", header.join(","))?;
    for ((row, l), t) in z.row_iter().zip(labels).zip(truth) {
        let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(f, "{},{l},{t}", vals.join(","))?;
    }
    Ok(())
}
