use thiserror::Error;

/// Errors raised by the measurement, Fisher and tomography routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate state: amplitude vector has zero norm")]
    DegenerateState,

    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("POVM has no outcomes")]
    EmptyPovm,

    #[error("POVM completeness violated: max residual {residual:e}")]
    Incomplete { residual: f64 },

    #[error("POVM is not gauge fixed: outcome {index} has a non-real or negative fiducial amplitude")]
    NotGaugeFixed { index: usize },

    #[error("Gram conditions violated: max residual {residual:e}")]
    GramViolation { residual: f64 },

    #[error("matrix is not orthogonal: max residual {residual:e}")]
    NotOrthogonal { residual: f64 },

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("not locally informationally complete: classical Fisher matrix is singular (min eigenvalue {min_eigenvalue:e})")]
    NotLocallyComplete { min_eigenvalue: f64 },

    #[error("coin weight p_chi must lie in [0, 1], got {0}")]
    InvalidWeight(f64),

    #[error("outcome {index} is orthogonal to the fiducial state (overlap {overlap:e})")]
    OrthogonalOutcome { index: usize, overlap: f64 },

    #[error("mixing matrix of size {size} cannot act on {outcomes} outcomes")]
    MixTooSmall { size: usize, outcomes: usize },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
