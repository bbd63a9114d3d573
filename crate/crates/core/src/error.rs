use thiserror::Error;

/// Errors produced by the numerical core and the experiment front end.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller supplied an argument outside the admissible range.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("empty domain: the mask selects no cells")]
    EmptyDomain,

    /// Argument outside the mathematical domain of a function (e.g. Γ(x) for x ≤ 0).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature failed to reach tolerance {tol:e} within depth {depth}: {context}")]
    Quadrature { tol: f64, depth: usize, context: String },

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
