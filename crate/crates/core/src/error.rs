use thiserror::Error;

/// Errors raised by the numerical and estimation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("{op}: argument {value} outside domain ({expected})")]
    Domain {
        op: &'static str,
        value: f64,
        expected: &'static str,
    },
    /// Adaptive quadrature ran out of its subdivision budget.
    #[error("quadrature did not converge: estimate {estimate}, residual error {residual}")]
    Quadrature { estimate: f64, residual: f64 },
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(&'static str),
    /// A curve model's analytic derivative disagrees with finite differences.
    #[error("{field} inconsistent with finite differences at x = {x} (analytic {analytic}, numeric {numeric})")]
    Derivative {
        field: &'static str,
        x: f64,
        analytic: f64,
        numeric: f64,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, value: f64, expected: &'static str) -> Error {
    Error::Domain {
        op,
        value,
        expected,
    }
}
