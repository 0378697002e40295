use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coincident points passed to the free Green's function")]
    SingularKernel,
    #[error("Krylov solver stagnated after {iterations} iterations (relative residual {residual:.3e})")]
    SolverStagnation { iterations: usize, residual: f64 },
    #[error("degenerate frequency: {0}")]
    DegenerateFrequency(String),
    #[error("near Dirichlet eigenvalue at l = {l} (condition estimate {condition:.3e})")]
    NearEigenvalue { l: usize, condition: f64 },
    #[error("perturbation too large: {0}")]
    ScaleTooLarge(String),
    #[error("step size too large: error grew from {min_error:.3e} to {error:.3e} at iteration {iteration}")]
    StepSizeTooLarge {
        iteration: usize,
        min_error: f64,
        error: f64,
    },
    #[error("weight construction needs 2B/E < 1 (got {ratio:.6}); decrease delta")]
    DeltaTooLarge { ratio: f64 },
    #[error("Riccati integration failed: {0}")]
    Stiffness(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidModel(_)
                | Error::InvalidPartition(_)
                | Error::GridMismatch(_)
                | Error::DimensionMismatch { .. }
                | Error::DeltaTooLarge { .. }
                | Error::ScaleTooLarge(_)
                | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
