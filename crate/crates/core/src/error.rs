use thiserror::Error;

use crate::fock::ModeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coefficient matrix is not unitary (max deviation {deviation:.3e})")]
    NonUnitary { deviation: f64 },

    #[error("mode {0} is not declared in this state")]
    UnknownMode(ModeId),

    #[error("conditioning event has zero probability")]
    ZeroProbability,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("transmissivity {0} is outside [0, 1]")]
    InvalidTransmissivity(f64),

    #[error("state holds {found} photons, above the cap of {cap}")]
    PhotonCapExceeded { found: u32, cap: u32 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParams(msg.into())
    }
}
