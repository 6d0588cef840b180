use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A site does not belong to the domain of the kernel it is evaluated on.
    #[error("site {site} is outside the domain of {kernel}")]
    Domain { site: String, kernel: &'static str },

    /// Finiteness of Γ is not an equivalence relation, or the matrix is malformed.
    #[error("invalid kernel structure: {0}")]
    Structure(String),

    /// Requested indices do not all lie in one finite block of Γ.
    #[error("indices {indices:?} are not in the finite block of anchor {anchor}")]
    Block { anchor: usize, indices: Vec<usize> },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("cholesky failed after {tries} jitter attempts (final pivot {pivot:e} at row {row})")]
    Factorization { tries: u32, pivot: f64, row: usize },

    #[error("series truncated before convergence: {0}")]
    Truncation(String),

    #[error("invalid data: {0}")]
    Data(String),

    /// Every violated field of an experiment config, one message each.
    #[error("config validation failed:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
