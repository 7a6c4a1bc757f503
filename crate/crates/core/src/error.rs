use std::path::PathBuf;

use thiserror::Error;

use crate::trajectory::VehicleId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("trajectory file is missing required column `{column}`")]
    MissingColumn { column: &'static str },

    #[error("trajectory row {row}: {message}")]
    BadRow { row: usize, message: String },

    #[error("no vehicles present in the representative frame {frame} of second {second}")]
    EmptySecond { second: u32, frame: i64 },

    #[error("trajectory file contains no frames")]
    EmptyTrajectory,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid value for `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("genome roster does not match: {0}")]
    RosterMismatch(String),

    #[error("vehicle {0} is not in the snapshot")]
    UnknownVehicle(VehicleId),

    #[error("instance too large: {count} joint evaluations exceeds the limit of {limit}")]
    InstanceTooLarge { count: u128, limit: u128 },

    #[error("point {index} does not dominate the reference point")]
    BeyondReference { index: usize },

    #[error("second {second}: {source}")]
    AtSecond {
        second: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the caller's input rather than by the run.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Config { .. }
            | Error::InstanceTooLarge { .. }
            | Error::MissingColumn { .. }
            | Error::BadRow { .. } => true,
            Error::AtSecond { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
