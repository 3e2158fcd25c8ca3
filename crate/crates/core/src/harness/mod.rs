//! Experiment orchestration: configuration, the measured iteration, the
//! results file, statistical analysis and reporting.
//!
//! Energy-measured regions are strictly sequential. Analysis and report
//! generation may use the parallel helpers.

pub mod analysis;
pub mod config;
pub mod report;
pub mod results;
pub mod run;

use std::path::Path;

pub use analysis::{analyze, analyze_with, AnalysisReport, EnergyMeasure};
pub use config::{AlarmMode, Combo, ExperimentConfig};
pub use report::{read_tables, render_markdown, write_tables};
pub use results::{read_results, ResultRow, ResultsWriter};
pub use run::{
    run_experiment, run_experiment_with_meter, run_iteration, run_iteration_with, IterationResult, RunOptions,
    RunSummary,
};

use crate::classifiers::ClassifierError;
use crate::energy::EnergyError;
use crate::metrics::MetricsError;
use crate::streamgen::StreamError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot resume: {0}")]
    Resume(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("malformed results file {path}: {reason}")]
    Malformed { path: String, reason: String },
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
