use thiserror::Error;

/// Error type shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix argument has the wrong length for the model.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A model or configuration violated one of its invariants.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A scenario/configuration file failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The linear solve inside a simulation step failed (singular mass matrix).
    #[error("solver failure at t={time}s: {detail}")]
    SolverFailure { time: f64, detail: String },

    /// A simulation produced a non-finite state.
    #[error("non-finite state at t={time}s ({detail})")]
    NonFiniteState { time: f64, detail: String },

    /// Mismatched fixed step sizes between coupled simulations.
    #[error("time step mismatch: master dt={master}, slave dt={slave}")]
    DtMismatch { master: f64, slave: f64 },

    /// A wrench was supplied in an unexpected frame.
    #[error("frame mismatch: expected {expected:?}, got {got:?}")]
    FrameMismatch {
        expected: crate::rigid_body::Frame,
        got: crate::rigid_body::Frame,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// JSON parse/shape error; `path` is the dotted field path when known.
    #[error("parse error in {file} at {field_path}: {detail}")]
    Parse {
        file: String,
        field_path: String,
        detail: String,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn dim(context: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            got,
        }
    }
}
