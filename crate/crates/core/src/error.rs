use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A coefficient, observable or weight returned a non-finite value.
    #[error("non-finite value at point {point:?}")]
    Evaluation { point: Vec<f64> },
    #[error("invalid argument: {0}")]
    Argument(String),
    /// The exponent `theta_b = 1 - d/p_b` (or its time-dependent analogue) is not positive.
    #[error("exponent regime violated: {0}")]
    ExponentRegime(String),
    #[error("outside the admissible domain: {0}")]
    Domain(String),
    #[error("configuration: {0}")]
    Configuration(String),
    /// A structural hypothesis (invariant measure, integrable decay, ...) is missing or fails.
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("{diverged} of {paths} paths diverged under the {scheme} scheme")]
    Diverged {
        diverged: usize,
        paths: usize,
        scheme: String,
    },
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error("no feasible Lyapunov constants: {0}")]
    Infeasible(String),
    /// The computation was declined; the message says what would make it possible.
    #[error("refused: {0}")]
    Refused(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// True for failures of a modelling hypothesis rather than of the input.
    pub fn is_assumption_gate(&self) -> bool {
        matches!(self, Error::Assumption(_) | Error::Refused(_))
    }
}
