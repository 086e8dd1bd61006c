use std::path::PathBuf;

use thiserror::Error;

/// Problems found while checking a scenario description.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{0} must be at least 1")]
    NonPositiveCount(String),
    #[error("unknown environment `{0}` (expected InH or UMi)")]
    UnknownEnvironment(String),
    #[error("sweep `{0}` has no values")]
    EmptySweep(String),
    #[error("{terminal} is {distance:.3} m from RIS {ris}, inside its Fraunhofer distance of {limit:.3} m")]
    NearFieldViolation {
        terminal: String,
        ris: usize,
        distance: f64,
        limit: f64,
    },
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("could not parse scenario: {0}")]
    Parse(String),
}

impl ConfigError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("points coincide at ({0}, {1}, {2})")]
    CoincidentPoints(f64, f64, f64),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("wavelength must be positive, got {0}")]
    NonPositiveWavelength(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagationError {
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("{what}: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    DimensionMismatch {
        what: &'static str,
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("expected {expected}, got {actual}")]
    DimensionError { expected: String, actual: String },
    #[error("pseudoinverse undefined: {0} is numerically zero")]
    SingularPinv(&'static str),
    #[error("RIS list is empty")]
    EmptyList,
    #[error("channel matrix has non-finite entries")]
    NonFiniteEntries,
    #[error("noise power must be positive, got {0} W")]
    NonPositiveNoise(f64),
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("at sweep value {sweep_value}, realization {realization}: {source}")]
    Realization {
        sweep_value: f64,
        realization: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed data: {reason}")]
    Malformed { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at(self, sweep_value: f64, realization: u64) -> Self {
        Error::Realization {
            sweep_value,
            realization,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
