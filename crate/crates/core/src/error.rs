use thiserror::Error;

/// Errors raised by mesh construction, assembly, solving and estimation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("non-conforming mesh: edge ({0}, {1}) is shared by more than two triangles")]
    NonConforming(usize, usize),
    #[error("degenerate triangle {element} (signed area {area:e})")]
    DegenerateElement { element: usize, area: f64 },
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("unsupported quadrature degree {0}")]
    UnsupportedQuadrature(usize),
    #[error("penalty parameter must be positive, got {0}")]
    InvalidPenalty(f64),
    #[error("coefficient beta is not symmetric positive definite at ({x}, {y})")]
    NonSpdCoefficient { x: f64, y: f64 },
    #[error("coefficient alpha is not positive at ({x}, {y})")]
    NonPositiveAlpha { x: f64, y: f64 },
    #[error("problem does not supply {0} for variable coefficients")]
    MissingDerivative(&'static str),
    #[error("trace sample on {expected}-sided edge got {got} side values")]
    SideCountMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-positive pivot during Cholesky factorisation")]
    NonPositivePivot,
    #[error("iterative solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("solver breakdown after {iterations} iterations")]
    Breakdown { iterations: usize },
    #[error("factorisation failed: {0}")]
    Factorization(String),
    #[error("invalid solver configuration: {0}")]
    InvalidSolverConfig(String),
    #[error("marking parameter must lie in (0, 1), got {0}")]
    InvalidTheta(f64),
    #[error("problem has no exact solution")]
    NoExactSolution,
    #[error("estimator vanished while the error is {0:e}")]
    ZeroEstimator(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of the linear solver or factorization.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NonPositivePivot
                | Error::NotConverged { .. }
                | Error::Breakdown { .. }
                | Error::Factorization(_)
        )
    }

    /// True for invalid user input: parameters, domains or configuration.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidDomain(_)
                | Error::UnsupportedQuadrature(_)
                | Error::InvalidPenalty(_)
                | Error::InvalidSolverConfig(_)
                | Error::InvalidTheta(_)
                | Error::NoExactSolution
                | Error::Config(_)
        )
    }
}
