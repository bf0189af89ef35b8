use std::path::PathBuf;

/// Errors produced by the occupancy toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("split error: {0}")]
    Split(String),

    #[error("calibration failed: {0}")]
    CalibrationFailure(String),

    #[error("no slots fall inside the occupancy range [{l_oc}, {u_oc}]")]
    NoSlotsInRange { l_oc: f64, u_oc: f64 },

    #[error(
        "svm solver did not converge after {iterations} iterations \
         (duality gap {duality_gap:.3e}, last objective delta {objective_delta:.3e})"
    )]
    Convergence {
        iterations: usize,
        duality_gap: f64,
        objective_delta: f64,
    },

    #[error("objective failed at iteration {iteration} for position {position}: {message}")]
    Objective {
        iteration: usize,
        position: f64,
        message: String,
    },

    #[error("model format: {0}")]
    ModelFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// IO failure attributed to `path`.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
