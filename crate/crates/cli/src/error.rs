use std::fmt;

use condreg_core::Error as CoreError;

/// Every failure carries a stage code; the binary prints `E-<CODE>: message`.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// File could not be opened, read or written.
    Io(String),
    /// Input file content is unusable.
    Data(String),
    /// Formula or option value did not parse.
    Parse(String),
    Config(String),
    Usage(String),
    Model(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Io(_) => "E-IO",
            Self::Data(_) => "E-DATA",
            Self::Parse(_) => "E-PARSE",
            Self::Config(_) => "E-CONFIG",
            Self::Usage(_) => "E-USAGE",
            Self::Model(_) => "E-MODEL",
        }
    }

    /// 1 for input/output failures, 2 for usage and model failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Io(_) | Self::Data(_) => 1,
            _ => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Io(m) | Self::Data(m) | Self::Parse(m) | Self::Config(m) | Self::Usage(m) | Self::Model(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // One line, whatever the upstream message looked like.
        let flat: Vec<&str> = self.message().split_whitespace().collect();
        write!(f, "{}: {}", self.code(), flat.join(" "))
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Parse { .. } | CoreError::EmptyData { .. } | CoreError::Schema(_) => Self::Data(e.to_string()),
            CoreError::Argument(_) => Self::Usage(e.to_string()),
            CoreError::InvalidTerm(_) | CoreError::DuplicateTerm(_) => Self::Parse(e.to_string()),
            _ => Self::Model(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
