use thiserror::Error;

/// Errors produced by the induction, coding and statistics routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("permutation {0} is reducible")]
    Reducible(String),

    #[error("invalid length vector: {0}")]
    InvalidLengths(String),

    #[error("non-generic point (lambda_m = lambda_pi^-1(m)) at step {step}")]
    NonGeneric { step: usize },

    #[error("Zorich count exceeded cap {cap} at step {step}")]
    CapExceeded { cap: u64, step: usize },

    #[error("denominator grew to {bits} bits (bound {bound}) at step {step}")]
    DenominatorOverflow { bits: u64, bound: u64, step: usize },

    #[error("incompatible word: {0}")]
    IncompatibleWord(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Rewrites the step index of a numeric failure; other variants pass through.
    pub fn at_step(self, step: usize) -> Self {
        match self {
            Error::NonGeneric { .. } => Error::NonGeneric { step },
            Error::CapExceeded { cap, .. } => Error::CapExceeded { cap, step },
            Error::DenominatorOverflow { bits, bound, .. } => {
                Error::DenominatorOverflow { bits, bound, step }
            }
            other => other,
        }
    }

    /// True for failures caused by the orbit itself rather than by bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonGeneric { .. } | Error::CapExceeded { .. } | Error::DenominatorOverflow { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
