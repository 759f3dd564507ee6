//! Experiment runner around [`metaug`]: configuration, the cross-validated
//! pipeline, grid search and report files.

pub mod commands;
pub mod config;
pub mod error;
pub mod grid;
pub mod pipeline;
pub mod report;
pub mod svg;

pub use config::{DatasetSpec, ExperimentConfig, Method, Overrides};
pub use error::{CliError, Result};
pub use pipeline::{run_experiment, FoldOutcome};
