//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A point violates a kernel or operator precondition (e.g. evaluating
    /// the mean-value density inside the closed ball).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid parameters or malformed input data.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A quadrature failed to converge; carries the last refinement residual.
    #[error("quadrature did not converge: residual {residual:.3e} (target {target:.3e})")]
    QuadratureNotConverged { residual: f64, target: f64 },

    /// The integrand grows too fast for the heavy-tail integral to converge.
    #[error("growth bound violated: sampled tail exponent {exponent:.3} exceeds 2s = {limit:.3}")]
    GrowthBound { exponent: f64, limit: f64 },

    /// Geometric query outside its domain of validity (point not on the
    /// boundary, non-smooth boundary point, origin not interior, ...).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A quotient is dominated by its own error estimate.
    #[error("ill-conditioned quantity: {what} = {value:.3e} below 10x its error {err:.3e}")]
    IllConditioned { what: String, value: f64, err: f64 },

    /// Linear program infeasible or unbounded.
    #[error("linear program failed: {0}")]
    Lp(String),

    /// A Monte Carlo estimate failed its statistical quality gate.
    #[error("statistical quality: {0}")]
    StatQuality(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }
}
