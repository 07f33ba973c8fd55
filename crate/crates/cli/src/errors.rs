//! Exit-code taxonomy: 0 success, 2 usage, 3 data, 4 numerical.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, inconsistent options, unknown names.
    Usage(String),
    /// Unreadable or malformed input data.
    Data(String),
    /// The computation itself failed (rank deficiency, non-convergence, ...).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<bartglm::Error> for CliError {
    fn from(e: bartglm::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
