//! Experiment sweeps over the `ergoforge` toolkit with CSV and JSON output.
//!
//! [`run_exact`], [`run_pvqd`] and [`run_vqergo`] compute their outputs in
//! memory; [`write_outputs`] stores them under an output directory.
//! [`report`] summarizes a records CSV.

pub mod commands;
pub mod config;
pub mod output;
pub mod report;

use std::path::PathBuf;

pub use commands::{run_exact, run_pvqd, run_vqergo, write_outputs, Outputs};
pub use config::{BackendKind, ExperimentConfig, Subsystem};
pub use output::{format_float, RECORD_HEADER};
pub use report::{report, Summary};

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Malformed {
        path: String,
        line: u64,
        message: String,
    },

    #[error("missing trajectory file {0}")]
    MissingTrajectory(PathBuf),

    #[error("{0} qubits exceeds the exact-command cap")]
    TooLarge(usize),

    #[error("ERGOFORGE_SEED must be an unsigned integer, got {0:?}")]
    BadSeed(String),

    #[error("p-VQD failed: {source}")]
    PvqdFailed {
        /// Completed trajectories plus the partial one.
        outputs: Box<Outputs>,
        source: ergoforge::Error,
    },

    #[error(transparent)]
    Core(#[from] ergoforge::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Pool(#[from] rayon::ThreadPoolBuildError),
}
