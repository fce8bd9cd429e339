//! Two-stage mood estimation from mobile sensing and search queries.
//!
//! The pipeline runs bottom-up:
//!
//! 1. [`ingest`] parses sensor, annotation, query, ad and patient-count logs.
//! 2. [`features`] cuts sensor streams into 3-hour local windows and computes
//!    a fixed 113-wide feature vector per window.
//! 3. [`smm`] trains a random forest on annotated windows (sensor mood model)
//!    and labels every window.
//! 4. [`qmm`] turns search queries into binary bag-of-query sessions, labels
//!    them from questionnaires or sensor-model predictions, and fits an L2
//!    logistic regression (query mood model).
//! 5. [`adpair`] detects ads whose clickers are systematically happier or
//!    sadder than non-clickers with a sampled pairwise statistic.
//! 6. [`national`] averages per-user daily scores into a national series and
//!    analyses its weekly rhythm and relation to infection counts.
//!
//! [`synth`] generates populations with planted mood so every stage has
//! recoverable ground truth, and [`pipeline`] wires the stages together.

pub mod adpair;
pub mod config;
pub mod features;
pub mod ingest;
pub mod national;
pub mod pipeline;
pub mod qmm;
pub mod rng;
pub mod smm;
pub mod stats;
pub mod svg;
pub mod synth;
pub mod time;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{}: {malformed} of {total} records malformed", path.display())]
    TooManyMalformed {
        path: PathBuf,
        malformed: usize,
        total: usize,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("model version mismatch: file has {found:?}, expected {expected:?}")]
    VersionMismatch { found: String, expected: String },
    #[error("corrupted model file {} at byte offset {offset}: {message}", path.display())]
    CorruptModel {
        path: PathBuf,
        offset: usize,
        message: String,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("missing stage output: {0}")]
    MissingStage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse(_) => "parse",
            Error::TooManyMalformed { .. } => "malformed_input",
            Error::Config(_) => "config",
            Error::VersionMismatch { .. } => "version_mismatch",
            Error::CorruptModel { .. } => "corrupt_model",
            Error::InvalidInput(_) => "invalid_input",
            Error::InsufficientData(_) => "insufficient_data",
            Error::MissingStage(_) => "missing_stage",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
