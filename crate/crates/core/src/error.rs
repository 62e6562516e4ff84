use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("constant-weight model needs 0 < lambda < n (lambda = {lambda}, n = {n})")]
    ConstantDomain { lambda: f64, n: usize },
    #[error("numerical integration failed: {0}")]
    Integration(String),
    #[error("root bracketing failed: {0}")]
    Bracketing(String),
    #[error("input too large: n = {n} exceeds the limit of {max}")]
    Size { n: usize, max: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("theorem hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics or the filesystem, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Integration(_) | Error::Bracketing(_) | Error::Io(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
