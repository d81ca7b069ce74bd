use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error (line {line}): {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid voxel grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate triangle {index} (det g = {det:e})")]
    DegenerateTriangle { index: usize, det: f64 },

    #[error("boundary condition mismatch: {0}")]
    BoundaryMismatch(String),

    #[error("no interior degrees of freedom")]
    NoInteriorDofs,

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("eigensolver did not converge after {iterations} expansions (tol {tol:e}, achieved residuals {achieved:?})")]
    NoConvergence {
        iterations: usize,
        tol: f64,
        achieved: Vec<f64>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("generator error: {0}")]
    Generator(String),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// True for failures of the numerical core (factorization, convergence) as opposed to
    /// bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite(_) | Error::NoConvergence { .. }
        )
    }
}
