use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("arity mismatch: expected {expected} components, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("component count {n} outside supported range 1..={max}")]
    TooManyComponents { n: usize, max: usize },

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("structure is not semicoherent: {0}")]
    NotSemicoherent(String),

    #[error("invalid lifetime model: {0}")]
    InvalidModel(String),

    #[error("model is not samplable; supply marginals ({0})")]
    NotSamplable(&'static str),

    #[error("invalid quality function: {0}")]
    InvalidQuality(String),

    #[error("quadrature did not converge for subset {subset}: estimated error {error:e} > tolerance {tol:e}")]
    QuadratureFailed { subset: String, error: f64, tol: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("route mismatch: {0}")]
    RouteMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ArityMismatch { .. }
            | Error::NotSemicoherent(_)
            | Error::NotSamplable(_)
            | Error::RouteMismatch(_) => 3,
            Error::QuadratureFailed { .. } | Error::Numerical(_) => 4,
            _ => 2,
        }
    }
}
