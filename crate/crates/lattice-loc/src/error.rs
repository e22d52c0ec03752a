use thiserror::Error;

/// Errors raised by the library. Each variant maps onto one CLI exit code.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Invalid configuration: species tables, geometry, scenario fields.
    #[error("configuration error: {0}")]
    Config(String),
    /// A value was requested outside the region where it is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// An operation was called with inputs violating its hypotheses.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A P-hat table failed one of its defining conditions.
    #[error("P-hat condition ({condition}) fails for monomial {monomial}: {detail}")]
    Construction {
        condition: String,
        monomial: String,
        detail: String,
    },
    /// An internal consistency check failed.
    #[error("verification failure: {0}")]
    Verification(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Domain(_) | Error::Precondition(_) => 3,
            Error::Construction { .. } | Error::Verification(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
