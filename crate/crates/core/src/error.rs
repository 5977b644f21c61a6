use thiserror::Error;

/// Errors raised while validating inputs or running the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension {0} is too small (need at least 2)")]
    DimTooSmall(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("negative entry {value:e} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("column {col} sums to {sum} instead of 1")]
    ColumnSumViolation { col: usize, sum: f64 },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid transition rate matrix: {0}")]
    InvalidRateMatrix(String),

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("invalid undesired set: {0}")]
    InvalidUndesiredSet(String),

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("matrix exponential produced non-finite entries")]
    ExpDivergence,

    #[error("base point touches the simplex boundary (r[{index}] = {value:e})")]
    BoundaryPoint { index: usize, value: f64 },

    #[error("target row-sum vector touches the boundary (r[{index}] = {value:e})")]
    BoundaryTarget { index: usize, value: f64 },

    #[error("path sample {sample} touches the boundary")]
    BoundarySample { sample: usize },

    #[error("scaling base matrix is not strictly positive at ({row}, {col})")]
    NotStrictlyPositive { row: usize, col: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("constrained path sample {sample}: {source}")]
    PathSample {
        sample: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("alpha = 2 is the log-barrier metric; use `ell` instead")]
    AlphaTwo,

    #[error("alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),

    #[error("rate must be positive, got {0}")]
    NonpositiveRate(f64),

    #[error("escape rate {rate} exceeds gamma = {gamma} in protocol {index}")]
    RateExceedsGamma { index: usize, rate: f64, gamma: f64 },

    #[error("invalid primitive operation: {0}")]
    InvalidPrimitive(String),

    #[error("search budget exceeded: estimated {estimate:e} nodes (limit {limit:e})")]
    BudgetExceeded { estimate: f64, limit: f64 },

    #[error("search parameters out of range: {0}")]
    InvalidSearch(String),

    #[error("channel is not trace preserving (deviation {0:e})")]
    TracePreservationViolation(f64),

    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("operator is not a projector (deviation {0:e})")]
    NotProjector(f64),

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("operator is singular or not positive definite (min eigenvalue {0:e})")]
    SingularInput(f64),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("dimension {0} is above the supported limit for this solver")]
    DimTooLarge(usize),

    #[error("Bloch vector sample {sample} lies on or outside the unit sphere")]
    BoundaryBlochVector { sample: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
