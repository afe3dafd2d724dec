//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by mesh construction, energy evaluation and the solvers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter violated its documented precondition (bad exponent,
    /// empty mesh, p = q, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation that requires a nonzero function received u == 0.
    #[error("the zero function is not admissible here")]
    ZeroFunction,

    /// The direction cannot be scaled onto the Nehari manifold:
    /// lambda*||u||_q^q - beta*||Du||_q^q <= 0, so xi_lambda has no positive
    /// root along this ray.
    #[error(
        "direction not projectable onto the Nehari manifold \
         (lambda*||u||_q^q - beta*||Du||_q^q = {margin:.6e} <= 0)"
    )]
    NotProjectable {
        /// The non-positive denominator lambda*||u||_q^q - beta*||Du||_q^q.
        margin: f64,
    },

    /// lambda lies at or below the discrete spectral threshold
    /// beta * lam1(q), so no nontrivial solution exists.
    #[error(
        "lambda = {lambda:.9e} is at or below the discrete threshold \
         beta*lam1(q) = {threshold:.9e}"
    )]
    InfeasibleLambda {
        /// The requested spectral parameter.
        lambda: f64,
        /// The discrete threshold beta * lam1(q).
        threshold: f64,
    },

    /// An iterative solver stopped without meeting its tolerance.
    #[error(
        "solver did not converge after {iterations} iterations \
         (residual {residual:.3e}): {detail}"
    )]
    NonConvergence {
        /// Iterations performed before giving up.
        iterations: usize,
        /// Best residual reached.
        residual: f64,
        /// What stalled, in words.
        detail: String,
    },

    /// Failure writing an output file.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
