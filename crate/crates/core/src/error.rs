use alloc::string::String;

/// Errors raised by the decoding core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// An exhaustive oracle was asked to enumerate more than its budget allows.
    #[error("capacity exceeded: {required} paths requested, limit is {limit}")]
    Capacity { required: u128, limit: u128 },
    /// A corpus or model contained nothing to learn from.
    #[error("empty input: {0}")]
    Empty(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
