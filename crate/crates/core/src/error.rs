use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain where a model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter or file failed validation. `field` names the offending key.
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("climb infeasible at {altitude_m:.1} m: rate of climb {rocd_ms:.3} m/s is below the floor")]
    InfeasibleClimb { altitude_m: f64, rocd_ms: f64 },

    /// A quantity that must be non-zero vanished (zero variance, zero energy share, ...).
    #[error("degenerate: {0}")]
    Degenerate(String),

    /// The model produced a physically meaningless value (e.g. non-positive thrust).
    #[error("model validity: {0}")]
    ModelValidity(String),

    #[error("flight {flight_id} rejected: {reason}")]
    FlightRejected { flight_id: String, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("unsupported model schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("corrupted file {path}: {reason}")]
    Corrupted { path: PathBuf, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: u64, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
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

    /// True for errors caused by bad user-supplied parameters or schemas, as
    /// opposed to problems with the data being processed.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation { .. } | Error::SchemaVersion { .. } | Error::Domain(_) | Error::Scenario(_)
        )
    }
}
