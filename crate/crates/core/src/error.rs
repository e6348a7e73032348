use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("argument {x} outside the open domain ({lo}, {hi})")]
    Domain { x: f64, lo: f64, hi: f64 },
    #[error("no saddlepoint for target {target}: outside the attainable range")]
    NoSaddlepoint { target: f64 },
    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },
    #[error("Hessian is singular or not positive definite")]
    SingularHessian,
    #[error("saddlepoint too close to zero for the regular expansion; use the mean-crossing branch")]
    Branch,
    #[error("unsupported case: {0}")]
    Unsupported(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("probability must lie in (0, 1], got {0}")]
    ZeroProbability(f64),
    #[error("empty sample: {0}")]
    EmptySample(&'static str),
    #[error("batch size {batch} too small for level {alpha} (need at least {min})")]
    BatchTooSmall { batch: usize, alpha: f64, min: usize },
}

impl Error {
    /// Short machine-readable tag, used for `ERR:<code>` cells.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "param",
            Error::Domain { .. } => "domain",
            Error::NoSaddlepoint { .. } => "nosaddle",
            Error::NonConvergence { .. } => "noconv",
            Error::SingularHessian => "singular",
            Error::Branch => "branch",
            Error::Unsupported(_) => "unsupported",
            Error::Degenerate(_) => "degenerate",
            Error::ZeroProbability(_) => "prob",
            Error::EmptySample(_) => "empty",
            Error::BatchTooSmall { .. } => "batch",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
