use std::fmt;

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent configuration (exit 2).
    Schema(String),
    /// The model violates the hypotheses of the requested regime (exit 3).
    Condition(String),
    /// Reading inputs or writing outputs failed (exit 4).
    Io(String),
    /// Numerical failure or failed validation (exit 1).
    Failure(String),
}

impl CliError {
    pub fn schema(path: &str, msg: &str) -> Self {
        CliError::Schema(format!("{path}: {msg}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Condition(_) => 3,
            CliError::Io(_) => 4,
            CliError::Failure(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema(m) => write!(f, "schema error: {m}"),
            CliError::Condition(m) => write!(f, "model condition refused: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Failure(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<bigjump_core::Error> for CliError {
    fn from(e: bigjump_core::Error) -> Self {
        use bigjump_core::Error;
        match e {
            Error::Input(_) | Error::Domain { .. } => CliError::Schema(e.to_string()),
            Error::Condition(_) => CliError::Condition(e.to_string()),
            Error::Numerical(_) => CliError::Failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
