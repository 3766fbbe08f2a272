use thiserror::Error;

use crate::spectral::Sector;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("quadrature domain error: {0}")]
    Domain(String),

    #[error("index out of table range: {0}")]
    Bounds(String),

    #[error("configuration mismatch: {0}")]
    Config(String),

    #[error("eigensolver failed in {sector} sector (tolerance {tolerance:e}): {reason}")]
    Eigensolver {
        sector: Sector,
        tolerance: f64,
        reason: String,
    },

    #[error("level labelling failed in {sector} sector at rank {rank}")]
    Labelling { sector: Sector, rank: usize },

    #[error("state is not normalized: Frobenius norm {norm}")]
    Normalization { norm: f64 },

    #[error("integration failure at step {step}: {reason}; retry with a smaller dt")]
    Integration { step: usize, reason: String },

    #[error("dense decomposition failed: {0}")]
    Linalg(String),

    #[error("decoherence fit: {0}")]
    Fit(String),

    #[error("sweep point {point}: {source}")]
    SweepPoint {
        point: String,
        #[source]
        source: Box<Error>,
    },

    #[error("corrupt table cache: {0}")]
    CorruptCache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the caller's inputs rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::InvalidParameter { .. }
            | Error::InvalidRange(_)
            | Error::Domain(_)
            | Error::Config(_) => true,
            Error::SweepPoint { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
