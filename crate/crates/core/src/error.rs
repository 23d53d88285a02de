use alloc::string::String;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not Hermitian: |M[{row},{col}] - conj(M[{col},{row}])| = {asymmetry:e}")]
    NotHermitian { asymmetry: f64, row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix exponential out of range: |s·λ| = {exponent:e} exceeds 700")]
    ExpRange { exponent: f64 },

    #[error("non-finite matrix entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },

    #[error("unphysical state: label {label} has eigenvalue {eigenvalue:e}")]
    UnphysicalState { label: usize, eigenvalue: f64 },

    #[error("state is not normalized: total trace {trace}")]
    NotNormalized { trace: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid transition: {0}")]
    InvalidTransition(String),

    #[error("full hybrid dimension {dim} exceeds the superoperator cap {cap}")]
    SuperoperatorCap { dim: usize, cap: usize },

    #[error("stationary subspace is {dimension}-dimensional; no unique stationary state")]
    DegenerateStationary { dimension: usize },

    #[error("stationary solve residual {residual:e} exceeds tolerance")]
    StationaryResidual { residual: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("trajectory did not converge (final sample distance {distance:e})")]
    NotConverged { distance: f64 },

    #[error("explicit step dt = {dt} exceeds the stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
