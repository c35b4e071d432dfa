use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("polytope facets do not bound a body: {0}")]
    UnboundedPolytope(String),

    #[error("exact enumeration needs n <= {max}, got n = {n}; use the Monte Carlo variant")]
    EnumerationTooLarge { n: usize, max: usize },

    #[error("level set too large: empirical measure {measure:.4} exceeds {limit:.4}")]
    LevelTooLarge { measure: f64, limit: f64 },

    #[error("net is empty")]
    EmptyNet,

    #[error("reference norm unavailable: {0}")]
    ReferenceUnavailable(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
