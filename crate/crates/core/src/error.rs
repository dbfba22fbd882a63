use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("outcome violates payoff table structure: {0}")]
    InvalidOutcome(String),

    #[error("zero deposit")]
    ZeroDeposit,

    #[error("never challenged: marginal cost is zero")]
    NeverChallenged,

    #[error("digest must be 32 bytes, got {0}")]
    DigestLength(usize),

    #[error("state needs at least 2 leaves, got {0}")]
    TooFewLeaves(usize),

    #[error("no pending attention test for validator {0}")]
    NoPendingTest(usize),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
