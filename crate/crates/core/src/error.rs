use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Which box invariant a table violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxInvariant {
    Normalization,
    NonNegativity,
    NoSignalingToAlice,
    NoSignalingToBob,
}

impl fmt::Display for BoxInvariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            BoxInvariant::Normalization => "normalization",
            BoxInvariant::NonNegativity => "non-negativity",
            BoxInvariant::NoSignalingToAlice => "no-signaling toward Alice",
            BoxInvariant::NoSignalingToBob => "no-signaling toward Bob",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// `x` and `y` are canonical (1-based) input indices.
    #[error("invalid box: {invariant} violated at (x={x}, y={y}), deviation {deviation:e}")]
    InvalidBox {
        invariant: BoxInvariant,
        x: usize,
        y: usize,
        deviation: f64,
    },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal {off_diagonal:e})")]
    EigenNoConvergence { sweeps: usize, off_diagonal: f64 },

    #[error("instance too large for exact enumeration: {0}")]
    TooLarge(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    /// Numerical failures map to exit code 2, everything else to 1.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::EigenNoConvergence { .. })
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(format!(
            "line {}, column {}: {}",
            err.line(),
            err.column(),
            err
        ))
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Io(std::io::Error::other(err))
    }
}
