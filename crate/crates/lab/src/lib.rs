//! Experiment driver for `minrays`.
//!
//! Configs are TOML files with a schema version. Every run produces a
//! [`record::ResultRecord`] keyed by the SHA-256 of the canonical config,
//! plus CSV tables and SVG disc charts under `<out>/<hash>/`.

pub mod config;
pub mod experiments;
pub mod export;
pub mod record;
pub mod svg;
pub mod verify;

use std::path::Path;

use thiserror::Error;

pub use config::{ExperimentConfig, ExperimentKind, Level, MetricFamily};
pub use experiments::{build_metric, run, run_uncached};
pub use record::{Cache, ResultRecord};
pub use verify::{verify_all, CriterionResult};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("record: {0}")]
    Record(String),
    #[error("csv {0}: {1}")]
    Csv(String, String),
    #[error(transparent)]
    Core(#[from] minrays::Error),
}

impl LabError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
