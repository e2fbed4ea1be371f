use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("trajectory {id}: {message}")]
    InvalidTrajectory { id: u64, message: String },

    #[error("invalid trajectory set: {0}")]
    InvalidSet(String),

    #[error("window exceeds snapshot count (window {window}, snapshots {snapshots})")]
    WindowTooLarge { window: usize, snapshots: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "Simpson's rule needs an odd sample count, got {samples}; use the trapezoid rule or re-window"
    )]
    SimpsonEvenSamples { samples: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("Gram numerically zero (largest eigenvalue {max_eigenvalue:e})")]
    GramNumericallyZero { max_eigenvalue: f64 },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error(
        "finite-rank representation is numerically defective (eigenvector condition {condition:e}); \
         increase regularization or supply more trajectories"
    )]
    Defective { condition: f64 },

    #[error("state norm {norm:e} exceeded blow-up bound {bound:e} at t = {time}")]
    BlowUp { time: f64, norm: f64, bound: f64 },

    #[error("model document: {0}")]
    Model(String),
}

pub type Result<T> = std::result::Result<T, Error>;
