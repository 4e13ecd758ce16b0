use thiserror::Error;

/// Errors produced by model construction, reduction and validation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("graph is disconnected: {0}")]
    Disconnected(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("schema violation at {path}: {msg}")]
    Schema { path: String, msg: String },

    #[error("matrix is singular or numerically singular (rcond ~ {rcond:.3e}): {context}")]
    Singular { rcond: f64, context: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "zero-pole residues do not match (relative deviation {deviation:.3e}); \
         the error system has an unbounded norm"
    )]
    ResidueMismatch { deviation: f64 },

    #[error("system is not asymptotically stable: {0}")]
    Unstable(String),

    #[error("linear algebra backend failure: {0}")]
    Backend(#[from] ndarray_linalg::error::LinalgError),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
