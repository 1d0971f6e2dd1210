use thiserror::Error;

/// Errors reported by every fallible operation in the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("element {value} out of range for a universe of size {size}")]
    OutOfRange { value: usize, size: usize },
    #[error("table of `{symbol}` has {found} entries, expected {expected}")]
    TableLength {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("not a congruence: {0}")]
    NotCongruence(String),
    #[error("cap exceeded: {what} needs {needed}, limit is {limit}")]
    CapExceeded {
        what: String,
        needed: u128,
        limit: u128,
    },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn cap(what: impl Into<String>, needed: u128, limit: usize) -> Self {
        Error::CapExceeded {
            what: what.into(),
            needed,
            limit: limit as u128,
        }
    }

    /// True for input errors (parse failures), as opposed to domain errors.
    pub fn is_parse(&self) -> bool {
        matches!(self, Error::Parse { .. })
    }
}
