//! Error types shared across the toolkit.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum SimError {
    /// Bad configuration: invalid parameter ranges, unknown config keys,
    /// dimension mismatches between model pieces.
    #[error("configuration error: {0}")]
    Config(String),

    /// Physically inadmissible input (non-positive inertia, state outside
    /// the system's dimensions).
    #[error("domain error: {0}")]
    Domain(String),

    /// A rollout or evaluation produced non-finite values.
    #[error("numeric divergence at step {step}: {msg}")]
    Divergence { step: usize, msg: String },

    /// A scalar evaluation failed (non-finite intermediate outside a rollout).
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// Optimization could not produce any finite iterate.
    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 config, 3 divergence, 4 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) | SimError::Domain(_) => 2,
            SimError::Divergence { .. } | SimError::Evaluation(_) | SimError::Optimization(_) => 3,
            SimError::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
