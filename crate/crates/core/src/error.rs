use thiserror::Error;

/// Errors raised anywhere in the discretization / solver pipeline.
#[derive(Debug, Error)]
pub enum PoroError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("geometry error on element {element}: {reason}")]
    Geometry { element: usize, reason: String },

    #[error("incomplete Cholesky breakdown at row {row} after all diagonal shifts")]
    Factorization { row: usize },

    #[error("inner solver did not converge: {iterations} iterations, relative residual {residual:.3e}")]
    InnerSolver { iterations: usize, residual: f64 },

    #[error("outer solver did not converge at step {step}: {iterations} iterations, relative residual {residual:.3e}")]
    NotConverged { step: usize, iterations: usize, residual: f64 },

    #[error("preconditioner application failed: {0}")]
    Preconditioner(Box<PoroError>),

    #[error("dense diagnostics refused: {0}")]
    TooLarge(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, PoroError>;

impl PoroError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        PoroError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
