use thiserror::Error;

/// Errors raised by the solvers, subroutines and problem constructors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("smoothness constants violate ell >= mu > 0: {0}")]
    Constants(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("{routine} diverged at iteration {iteration}")]
    Divergence { routine: &'static str, iteration: usize },

    #[error("linear map is not positive definite (p'Ap = {curvature:e} at CG step {iteration})")]
    NotPositiveDefinite { curvature: f64, iteration: usize },

    #[error("{routine} did not reach tolerance {tol:e} within {cap} iterations")]
    NonConvergence {
        routine: &'static str,
        tol: f64,
        cap: usize,
    },

    #[error("dataset error: {0}")]
    Dataset(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
