use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulation and diagnostics pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates an invariant. `field` is the dotted
    /// path of the offending key, e.g. `params.k_eq`.
    #[error("invalid value for `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// Scenario text could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The integrator produced a non-finite state.
    #[error("integration failure at t = {t} s: non-finite {quantity}")]
    Integration { t: f64, quantity: &'static str },

    /// A discretized filter ended up with poles on or outside the unit circle.
    #[error("unstable discrete filter `{name}`: poles not strictly inside the unit circle")]
    UnstableFilter { name: &'static str },

    #[error("sample rate mismatch: filters built for {expected} Hz, telemetry at {actual} Hz")]
    SampleRateMismatch { expected: f64, actual: f64 },

    /// A stuck fault activated before any pre-onset sample was observed.
    #[error("stuck fault on `{channel}` has no pre-onset sample to freeze (onset {onset} s)")]
    StuckWithoutHistory { channel: &'static str, onset: f64 },

    #[error("residual stream is empty")]
    EmptyStream,

    #[error("non-finite residual for constraint `{constraint}` at t = {t} s")]
    NonFiniteResidual { constraint: &'static str, t: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Output { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
