//! Experiment configuration, orchestration, logging and summary statistics.

pub mod config;
pub mod experiment;
pub mod runlog;
pub mod stats;

pub use config::{DatasetSource, ExperimentConfig, Preset};
pub use experiment::{plan, prepare_data, run_experiment, run_matrix, run_single, summarize, write_outputs, ExperimentOutput, RunSpec, Summary};
pub use runlog::{ControlRow, EpochRow, RunLog, RunMeta};
pub use stats::{bootstrap_median_ci, composite_score, pooled_columns, red, MetricColumn, MetricGroup, MetricObservation, RedResult};
