use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Structural or semantic problem in a configuration document.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("failed to read particle file {path}: {source}")]
    ParticleFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed particle file {path}, row {row}: {message}")]
    ParticleRow {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("{system} system is not positive definite (n = {dim})")]
    Factorization { system: &'static str, dim: usize },

    #[error("gamma bisection did not converge in {iterations} iterations; bracket [{lo}, {hi}], residual {residual:e}")]
    NoConvergence {
        iterations: usize,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    #[error("degenerate saddle: beta denominator is {denominator:e} (gamma = {gamma})")]
    DegenerateSaddle { denominator: f64, gamma: f64 },

    #[error("bracketing failed along {axis}: {trace}")]
    Bracket { axis: &'static str, trace: String },

    #[error("trajectory records disagree: {0}")]
    RecordMismatch(String),

    #[error("config hash mismatch: {left} vs {right}")]
    HashMismatch { left: String, right: String },

    #[error("invalid {axis} value {value}: {reason}")]
    SweepValue {
        axis: &'static str,
        value: f64,
        reason: String,
    },

    #[error("malformed {what}: {message}")]
    Format { what: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
