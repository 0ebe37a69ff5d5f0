use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    /// A phase value reached or crossed the pure states +-1.
    #[error("phase field out of (-1,1): {0}")]
    PhaseDomain(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("compatibility violated: mean {mean:.3e} is not small relative to norm {norm:.3e}")]
    Compatibility { mean: f64, norm: f64 },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse: {0}")]
    Parse(String),

    #[error("step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Solver failures (as opposed to invariant or input problems).
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::Step { source, .. } => source.is_solver_failure(),
            e => matches!(
                e,
                Error::NonConvergence { .. } | Error::NonFinite(_) | Error::Quadrature(_)
            ),
        }
    }

    /// A state left the admissible set (phase range, temperature range,
    /// divergence, no-slip).
    pub fn is_invariant_violation(&self) -> bool {
        match self {
            Error::Step { source, .. } => source.is_invariant_violation(),
            e => matches!(
                e,
                Error::PhaseDomain(_) | Error::Range(_) | Error::Precondition(_)
            ),
        }
    }
}
