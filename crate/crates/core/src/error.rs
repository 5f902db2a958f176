use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the simulation and special-function routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the routine.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of a closed-form solution does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The adaptive integrator could not make progress.
    #[error("integration failed at tau = {last_tau}: {reason}")]
    Integration { last_tau: f64, reason: String },

    /// An internal identity that must hold by construction was violated.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    /// Evaluation at a singular point with a negative exponent.
    #[error("pole at z = {0}")]
    Pole(Complex64),

    /// A continuation path comes too close to a singular point.
    #[error("path passes within {distance:e} of singular point {singular_point} at z = {z}")]
    PathTooClose {
        z: Complex64,
        singular_point: Complex64,
        distance: f64,
    },

    /// A Taylor re-expansion did not converge over the requested step.
    #[error("series step from z = {z} did not converge (tail {tail:e})")]
    StepNotConverged { z: Complex64, tail: f64 },

    /// Characteristic exponents differ by an integer and the requested
    /// solution needs a logarithmic term.
    #[error("exponents {0} and {1} differ by an integer; logarithmic solution required")]
    LogarithmicCase(f64, f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
