use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure categories shared by every module.
///
/// The CLI maps these onto process exit codes, so new variants need a
/// matching arm there.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a mathematical function.
    #[error("domain error in {func}: {msg}")]
    Domain { func: &'static str, msg: String },

    /// An observation violates the support rule of a model.
    #[error("data error ({rule}): {msg}")]
    Data { rule: &'static str, msg: String },

    /// A statistic was requested from a state that cannot provide it.
    #[error("state error: {0}")]
    State(String),

    /// Caller broke an API contract (mismatched lengths, unsorted grids, ...).
    #[error("contract error: {0}")]
    Contract(String),

    /// Invalid configuration (bad parameter combination, out-of-range sizes).
    #[error("config error: {0}")]
    Config(String),

    /// A numerical routine failed to converge or produced garbage.
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { func, msg: msg.into() }
    }

    pub(crate) fn data(rule: &'static str, msg: impl Into<String>) -> Self {
        Error::Data { rule, msg: msg.into() }
    }
}
