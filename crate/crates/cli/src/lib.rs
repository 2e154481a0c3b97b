//! Experiment runner for absorbing-frequency centrality: configuration,
//! orchestration and report writing behind the `afc` binary.

pub mod config;
pub mod experiment;
pub mod report;

pub use config::{ConfigError, ExperimentConfig};
pub use experiment::{reproduce, run_experiment, RunError, RunSummary};
