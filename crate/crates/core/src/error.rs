use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Library error type. Variants map onto the CLI exit-code classes:
/// configuration problems, input problems, and internal invariant failures.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data; `line` is 1-based.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Invalid parameter combination or out-of-range argument.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Graph too large for the exact solver.
    #[error("oracle limits exceeded: {0}")]
    OracleLimit(String),

    /// An edge set that was required to be a matching is not one.
    #[error("invalid matching: {0}")]
    InvalidMatching(String),

    /// A checked internal invariant failed; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
