//! Seeded Monte Carlo experiments over masked covariance estimators.

mod config;
mod experiment;
mod output;
mod scaling;

pub use config::{ErrorMetric, ExperimentConfig, MaskSpec, SigmaSpec, DEFAULT_REPLICATES};
pub use experiment::{
    decoupling_summary, run_decoupled_experiment, run_decoupled_experiment_with, run_error_experiment,
    stream_index, DecouplingSummary, Experiment, MaskSource, StreamOrder, TrialResult,
};
pub use output::{
    emit_results, read_results_csv, write_jsonl, HarnessPolicy, OutputFormat, RunMetadata, CSV_COLUMNS,
};
pub use scaling::{fit_scaling, fit_log_log, Axis, ScalingReport};
