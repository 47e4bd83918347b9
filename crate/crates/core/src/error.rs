//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },

    #[error("input matrix is not symmetric (relative asymmetry {rel:e})")]
    Asymmetric { rel: f64 },

    #[error("operation undefined for the zero matrix")]
    ZeroMatrix,

    #[error("{algorithm} failed to converge after {iterations} iterations")]
    Convergence {
        algorithm: &'static str,
        iterations: usize,
    },

    #[error("singular constitutive configuration: {0}")]
    SingularConstitutive(String),

    #[error("propagator overflow (saturation) at t = {t}")]
    Saturation { t: f64 },

    #[error("unknown parameter name `{0}`")]
    UnknownParameter(String),

    #[error("bracket [{lo}, {hi}] has no sign change in the criterion")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("inadmissible parameters: {0} (pass the override flag to force evaluation)")]
    Inadmissible(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
