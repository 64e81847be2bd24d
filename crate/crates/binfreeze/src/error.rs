//! Error taxonomy. Every fallible public API returns [`Error`]; the CLI maps
//! variants onto process exit codes (see [`Error::exit_code`]).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes are incompatible. The message names both shapes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An API contract was violated (bad argument range, wrong call order).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Invalid run configuration (unknown key, unparsable value, bad combination).
    #[error("config error: {0}")]
    Config(String),

    /// Malformed input data or artifact file. Includes a byte offset when known.
    #[error("format error: {0}")]
    Format(String),

    /// Numerical failure during training (non-finite loss).
    #[error("numerical abort: {0}")]
    Numeric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit code: 0 is success, 2 config/usage, 3 data or artifact format, 4 numerical abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Contract(_) | Error::Dimension(_) => 2,
            Error::Format(_) | Error::Io(_) => 3,
            Error::Numeric(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
