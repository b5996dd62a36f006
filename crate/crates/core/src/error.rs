use thiserror::Error;

/// Errors returned by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no unique best action: minimum mean {mean} attained by actions {actions:?}")]
    NoUniqueBestAction { mean: f64, actions: Vec<usize> },

    #[error("protocol violation: expected round {expected}, got {got}")]
    ProtocolViolation { expected: u64, got: u64 },

    #[error("invalid loss at round {round}: coordinate {index} is {value}, expected a value in [0, 1]")]
    InvalidLoss { round: u64, index: usize, value: f64 },

    #[error("enumeration budget exceeded: {what} needs {estimate} evaluations, limit is {limit}")]
    BudgetExceeded {
        what: &'static str,
        estimate: f64,
        limit: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
