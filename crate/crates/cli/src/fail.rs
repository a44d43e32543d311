use std::fmt;

use evseq_core::Error;

pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_SOFTWARE: i32 = 70;
pub const EXIT_IO: i32 = 74;

/// An error carrying its process exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure { code: EXIT_DATA, message: message.into() }
    }

    pub fn io(context: &str, err: std::io::Error) -> Self {
        Failure { code: EXIT_IO, message: format!("{context}: {err}") }
    }

    /// Error raised while setting up a command, before any data is read.
    pub fn setup(err: Error) -> Self {
        Failure::config(err.to_string())
    }

    /// Error raised while processing data row `row` (1-based).
    pub fn at_row(row: usize, err: Error) -> Self {
        let code = match err {
            Error::Data { .. } => EXIT_DATA,
            Error::Config(_) => EXIT_CONFIG,
            _ => EXIT_SOFTWARE,
        };
        Failure { code, message: format!("row {row}: {err}") }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Config(_) => EXIT_CONFIG,
            Error::Data { .. } => EXIT_DATA,
            Error::Domain { .. } | Error::State(_) | Error::Contract(_) | Error::Numerical(_) => EXIT_SOFTWARE,
        };
        Failure { code, message: err.to_string() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}
