//! Experiment harness: configuration, runs, sweeps and report files.

pub mod config;
pub mod experiments;
pub mod output;
pub mod record;
pub mod sweep;

pub use config::{ConfigError, ExperimentConfig, Overrides};
pub use experiments::{run, Experiment, Outcome};
pub use record::{Check, ResultRecord, Status};
pub use sweep::run_sweep;
