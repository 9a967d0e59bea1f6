//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    /// A standing assumption on the problem data is violated (order bounds,
    /// excitation shape, partition structure).
    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error(
        "linear solver did not converge: residual {residual:.3e} after {iterations} iterations"
    )]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code: 1 config/validation, 2 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidMesh(_)
            | Error::InvalidField(_)
            | Error::Assumption(_)
            | Error::Io { .. }
            | Error::Parse { .. }
            | Error::Json(_) => 1,
            Error::SolverDiverged { .. } | Error::NotPositiveDefinite { .. } | Error::Fit(_) => 2,
        }
    }
}
