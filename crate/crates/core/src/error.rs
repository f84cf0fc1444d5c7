use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulation modules and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("time {t} is outside the trajectory window [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },

    #[error("step size rejected: dt*lambda = {dt_lambda} exceeds the stability limit {limit}")]
    StepSize { dt_lambda: f64, limit: f64 },

    #[error("mass drift {drift:e} exceeds tolerance {tol:e}")]
    MassDrift { drift: f64, tol: f64 },

    #[error("cumulative clipped mass {clipped:e} exceeds tolerance {tol:e}")]
    ClippedMass { clipped: f64, tol: f64 },

    #[error("density grid too narrow: boundary density {boundary:e} exceeds {tol:e}")]
    BoundaryMass { boundary: f64, tol: f64 },

    #[error("configuration error")]
    Config(Vec<crate::config::FieldError>),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter { .. } => 2,
            _ => 3,
        }
    }
}
