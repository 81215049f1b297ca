use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("spectral radius {radius} is not below one")]
    SpectralRadius { radius: f64 },

    #[error("closed loop is not stable (spectral radius {radius})")]
    NotStabilizable { radius: f64 },

    #[error("rollout diverged at step {step}")]
    Diverged { step: usize },

    #[error("bounded-direction constants are invalid: {0}")]
    InvalidRegime(String),

    #[error("instance generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },

    #[error("solver stopped after {iterations} outer iterations without meeting the tolerance")]
    MaxItersExceeded { iterations: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
