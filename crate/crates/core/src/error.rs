use thiserror::Error;

/// Errors raised by the field, operator and laboratory layers.
#[derive(Debug, Error)]
pub enum SmecticError {
    #[error("invalid grid {n1}x{n2}: both sizes must be even and at least 8")]
    InvalidGrid { n1: usize, n2: usize },

    #[error("array of length {got} does not match grid size {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("k1 = 0 content {residual:e} exceeds admissibility tolerance {tolerance:e}")]
    NonAdmissibleInput { residual: f64, tolerance: f64 },

    #[error("imaginary residue {residual:e} after inverse transform: spectrum is not conjugate-symmetric")]
    ConjugateSymmetryViolation { residual: f64 },

    #[error("band limit exceeded: {detail}")]
    BandLimitExceeded { detail: String },

    #[error("energy vanishes while the estimated quantity is {lhs:e}")]
    DegenerateEnergy { lhs: f64 },

    #[error("interface {index} violates the Rankine-Hugoniot condition (residual {residual:e})")]
    IncompatibleProfile { index: usize, residual: f64 },

    #[error("invalid jump profile: {0}")]
    InvalidProfile(String),

    #[error("mollification width {delta} outside [{lo}, {hi}]")]
    WidthOutOfRange { delta: f64, lo: f64, hi: f64 },

    #[error("golden-section bracket could not be established")]
    BracketFailure,

    #[error("line search failed after {backtracks} backtracks")]
    LineSearchFailure { backtracks: usize },

    #[error("gradient finite-difference check failed on {n1}x{n2}: relative error {rel_error:e}")]
    GradientCheckFailed { n1: usize, n2: usize, rel_error: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = SmecticError> = std::result::Result<T, E>;
