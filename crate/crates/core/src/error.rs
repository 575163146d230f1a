use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index out of range: {0}")]
    Index(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("truncation leakage {leakage:.3e} exceeds tolerance {tol:.3e} ({context})")]
    TruncationLeakage {
        leakage: f64,
        tol: f64,
        context: String,
    },

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("non-positive coupling chi = {0}; the phase-gate duration pi/chi is undefined")]
    NonPositiveChi(f64),

    #[error("norm drifted by {0:.3e} during propagation")]
    NormDrift(f64),

    #[error("transfer efficiency {0:.3e} is below 0.5; the residual phase is undefined")]
    UndefinedPhase(f64),

    #[error("phonon restoration fidelity {0:.6} < 0.9; no clean truth table exists")]
    AmbiguousExtraction(f64),

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
