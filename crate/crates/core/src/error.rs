use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("instance too large for brute force: {0}")]
    SizeGuard(String),

    #[error("infeasible base solution: {0}")]
    InfeasibleBase(String),

    /// A cached structure no longer matches the matching it was built from.
    #[error("stale search state: {0}")]
    StaleState(String),

    /// Internal consistency failure. Indicates a bug, never bad input.
    #[error("internal invariant violation: {0}")]
    Defect(String),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
