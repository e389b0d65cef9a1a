use thiserror::Error;

/// Errors raised by the numerical kernels and the batch front-end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("gamma function pole at x = {0}")]
    GammaPole(f64),

    #[error("argument z = {z} outside the supported domain (z <= {max})")]
    Domain { z: f64, max: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("ellipticity violated at x = {x}: a11 = {value} < kappa = {kappa}")]
    Ellipticity { x: f64, value: f64, kappa: f64 },

    #[error("grid mismatch: expected {expected} interior nodes, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("kernel K(t) is singular at t = 0")]
    KernelSingular,

    #[error("implicit step matrix singular at step {step} (condition estimate {condition:e})")]
    StepSolve { step: usize, condition: f64 },

    #[error("degenerate denominator E(-lambda T^alpha) = {value:e} for mode {mode}")]
    DegenerateDenominator { mode: usize, value: f64 },

    #[error("forward solve for column {column} of L failed: {source}")]
    Column { column: usize, source: Box<Error> },

    #[error(
        "I + L is numerically singular (condition estimate {condition:e}): \
         injectivity of La = -a => a = 0 fails in the discrete problem"
    )]
    NearSingular { condition: f64 },

    #[error("certificate failed: residual {residual:e} exceeds tolerance {tolerance:e}")]
    Certificate { residual: f64, tolerance: f64 },

    #[error("terminal data is not on a compatible mesh: {0}")]
    Mesh(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
