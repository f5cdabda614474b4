//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Bad model parameters, configuration values, or call arguments.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The integrator lost probability beyond tolerance; the step is too
    /// large for the fastest rate in the generator.
    #[error("integration failure at t = {t:.6} ps: |tr rho - 1| = {drift:.3e} exceeds 1e-6, reduce dt")]
    TraceDrift { t: f64, drift: f64 },

    /// The drive evaluated to a non-finite field value.
    #[error("non-finite field value at t = {0:.6} ps")]
    NonFiniteField(f64),

    /// A state violated positivity beyond the clipping tolerance.
    #[error("matrix is not positive semidefinite: min eigenvalue {0:.3e}")]
    NotPositive(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
