use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The beta-type constant attached to an inequality is infinite.
    #[error("divergent beta: beta_b({x}, {y}) is infinite for this kernel and dimension")]
    Divergent { x: f64, y: f64 },

    /// A precondition of an inequality check does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature failed to reach tolerance {tolerance:e}: estimate {estimate:e} with error {error:e} after {panels} panels")]
    QuadratureFailure {
        estimate: f64,
        error: f64,
        tolerance: f64,
        panels: usize,
    },

    #[error("integral is not finite: {0}")]
    NonIntegrable(String),

    /// Mass near the boundary of a periodic grid exceeds the aliasing tolerance.
    #[error("aliasing: boundary mass ratio {ratio:e} exceeds {tolerance:e}")]
    Aliasing { ratio: f64, tolerance: f64 },

    #[error("cannot parse {what} from {input:?}: {reason}")]
    Parse {
        what: &'static str,
        input: String,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn parse(what: &'static str, input: &str, reason: impl Into<String>) -> Self {
        Error::Parse {
            what,
            input: input.to_string(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureFailure { .. } | Error::NonIntegrable(_) | Error::Aliasing { .. }
        )
    }
}
