//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A value that must lie in [0, 1] does not.
    #[error("probability {0} outside [0, 1]")]
    ProbabilityRange(f64),

    /// Validation failure described by the message.
    #[error("{0}")]
    InvalidInput(String),

    /// Majority/minority votes are only defined for odd coalitions.
    #[error("{attack} attack needs an odd coalition size, got c = {c}")]
    EvenCoalition { attack: &'static str, c: usize },

    /// Channel entries violate theta[0] = 0 or theta[c] = 1.
    #[error("marking assumption violated: {0}")]
    Marking(String),

    /// The threshold/length construction needs gamma = ln(1/eps2)/eta < 1.
    #[error(
        "eps2 too small relative to n/eps1 for the scheme-parameter \
         construction: gamma = {gamma} but gamma < 1 is required"
    )]
    GammaTooLarge { gamma: f64 },

    /// Joint accusation would enumerate more tuples than the budget allows.
    #[error(
        "tuple enumeration budget exceeded: {required} tuples needed, \
         budget allows n <= {max_n} and c <= {max_c}"
    )]
    TupleBudget {
        required: u128,
        max_n: usize,
        max_c: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A code or channel file does not match the documented format.
    #[error("malformed input file: {0}")]
    FileFormat(String),
}

impl Error {
    /// Runtime refusals (resource budgets) map to CLI exit code 2; all other
    /// errors are validation failures mapping to exit code 1.
    pub fn is_refusal(&self) -> bool {
        matches!(self, Error::TupleBudget { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
