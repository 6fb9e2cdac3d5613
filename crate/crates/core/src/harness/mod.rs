//! Monte-Carlo benchmark harness: configuration, seeded execution,
//! aggregation and CSV/SVG output.

pub mod bounds;
pub mod config;
pub mod output;
pub mod runner;
pub mod svg;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::model::ModelError;
use crate::pursuit::PursuitError;

pub use config::{parse_config, AlgorithmConfig, ConfigOverrides, ExperimentConfig, StopChoice};
pub use output::{write_csv, write_manifest, write_trials_csv};
pub use runner::{run_experiment, run_experiment_with, run_trial, CellSummary, ExperimentOutput, Schedule, TrialRecord};
pub use svg::write_svg_plots;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Pursuit(#[from] PursuitError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
