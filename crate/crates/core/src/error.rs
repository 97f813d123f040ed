use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("power iteration did not converge after {iterations} iterations (last estimate {last_estimate})")]
    ConvergenceFailure { last_estimate: f64, iterations: usize },

    /// A subgradient projection met `g(x) > 0` with a zero subgradient, so
    /// the constraint has a positive infimum and the problem is infeasible.
    #[error("constraint is infeasible (value {value} > 0 with zero subgradient)")]
    Infeasible { value: f64 },

    /// An operator error raised while walking a string, with its position.
    #[error("string {string}, step {step} (operator {operator}): {source}")]
    InString {
        string: usize,
        step: usize,
        operator: usize,
        source: alloc::boxed::Box<Error>,
    },

    #[error("internal contract violated: {0}")]
    Contract(&'static str),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for infeasibility, whether or not it carries a string position.
    pub fn is_infeasible(&self) -> bool {
        match self {
            Error::Infeasible { .. } => true,
            Error::InString { source, .. } => source.is_infeasible(),
            _ => false,
        }
    }
}
