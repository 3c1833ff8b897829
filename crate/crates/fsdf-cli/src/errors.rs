//! CLI error categories mapped to sysexits-style codes.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or missing required parameter (exit 64).
    Usage(String),
    /// Malformed input data: archives, clouds, specs, configs (exit 65).
    Data(String),
    /// Filesystem problems (exit 66).
    Io(String),
    /// Pipeline failures (exit 70).
    Processing(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Io(_) => "io",
            CliError::Processing(_) => "processing",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Data(_) => 65,
            CliError::Io(_) => 66,
            CliError::Processing(_) => 70,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Io(m) | CliError::Processing(m) => {
                f.write_str(m)
            }
        }
    }
}
