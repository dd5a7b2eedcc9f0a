use std::fmt;

/// Failure of a command, split by the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input; exit code 2.
    Input { name: &'static str, message: String },
    /// Failure inside the numerical library; exit code 3 unless the library
    /// flags it as an input problem.
    Numeric(colored_lsq::Error),
}

impl CliError {
    pub fn input(name: &'static str, message: impl Into<String>) -> Self {
        CliError::Input { name, message: message.into() }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::input("ParseError", message)
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::input("InvalidConfig", message)
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input { .. } => 2,
            CliError::Numeric(e) if e.is_input_error() => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CliError::Input { name, .. } => name,
            CliError::Numeric(e) => e.name(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input { name, message } => write!(f, "{name}: {message}"),
            CliError::Numeric(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<colored_lsq::Error> for CliError {
    fn from(e: colored_lsq::Error) -> Self {
        CliError::Numeric(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
