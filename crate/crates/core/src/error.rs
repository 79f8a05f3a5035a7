use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("triangular matrix has a (near) zero diagonal at {index}")]
    SingularTriangular { index: usize },

    #[error("matrix is singular (pivot {pivot})")]
    Singular { pivot: usize },

    #[error(
        "normal equations stayed indefinite after regularization grew to {regularization:e} (iteration {iteration})"
    )]
    IllConditioned { iteration: usize, regularization: f64 },

    #[error("sign iteration did not reach a fixed point; flipped positions {flipped:?}")]
    SignCycle { flipped: Vec<usize> },

    #[error("active set would exceed {limit} columns")]
    RankGuard { limit: usize },

    #[error("simplex basis is singular")]
    SingularBasis,

    #[error("dual ratio test found no entering column; the primal problem is infeasible")]
    DualUnbounded,

    #[error("problem has no `{0}` block")]
    MissingBlock(&'static str),

    #[error("certificate is infeasible: {0}")]
    InfeasibleCertificate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
