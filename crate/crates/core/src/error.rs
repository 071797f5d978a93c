use thiserror::Error;

/// Errors raised by the corridor, welfare and switching models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error(
        "quadrature on [{lo}, {hi}] stopped at error estimate {estimate:e} \
         (tolerance {tolerance:e}) after {panels} panels"
    )]
    Quadrature {
        lo: f64,
        hi: f64,
        estimate: f64,
        tolerance: f64,
        panels: usize,
    },

    #[error("search grid is empty")]
    EmptyGrid,

    #[error("no candidate satisfies the constraints: {0}")]
    Infeasible(&'static str),

    #[error("{0} is undefined for these inputs")]
    Undefined(&'static str),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("structural condition violated: {0}")]
    Structural(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        expected,
    }
}

pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}
