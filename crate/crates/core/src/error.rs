use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("argument {z} is a pole (nonpositive integer)")]
    Pole { z: Complex64 },

    #[error("Pochhammer denominator vanished at index {index} (|factor| = {magnitude:e})")]
    DenominatorPole { index: usize, magnitude: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("{what} did not converge within {limit} terms")]
    NonConvergence { what: &'static str, limit: usize },

    #[error("{what}: closed form {closed_form} vs direct {direct} (relative error {rel_err:e})")]
    CrossCheckFailure {
        what: &'static str,
        closed_form: Complex64,
        direct: Complex64,
        rel_err: f64,
    },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("steady-state system is singular at cutoff {cutoff}")]
    SingularSystem { cutoff: usize },

    #[error("density matrix invariant violated: {what} = {value:e}")]
    InvariantViolation { what: &'static str, value: f64 },

    #[error("cutoff {cutoff} too small, need at least {needed}")]
    CutoffTooSmall { cutoff: usize, needed: usize },
}
