//! Experiment runner, result files and the command-line front end.

pub mod cli;
mod experiment;
pub mod suites;

pub use experiment::{
    emit_results, prepare_dataset, pretrained_autoencoder, results_csv, run_experiment, Aggregate,
    DatasetSource, ExperimentSpec, MeanStd, Normalization, OutputFormat, RepetitionRecord,
    ResultRecord, CSV_HEADER,
};
