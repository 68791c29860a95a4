use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the DMA models, evaluators and experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Lorentzian response evaluated at its pole (f = f0 = {frequency} Hz with zero damping)")]
    PoleEvaluation { frequency: f64 },

    #[error("singular analog front-end: condition number {condition:e} exceeds limit; offending rows {rows:?}")]
    SingularFrontEnd { condition: f64, rows: Vec<usize> },

    #[error("degenerate pattern: all element weights are zero")]
    DegeneratePattern,

    #[error(
        "data-processing violation in trial {trial}: {architecture} at {snr_db} dB gives {rate} bps/Hz > fully digital {bound} bps/Hz"
    )]
    DataProcessingViolation {
        trial: usize,
        architecture: String,
        snr_db: f64,
        rate: f64,
        bound: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::PoleEvaluation { .. }
                | Error::SingularFrontEnd { .. }
                | Error::DegeneratePattern
                | Error::DataProcessingViolation { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
