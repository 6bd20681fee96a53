use std::fmt;

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code when a verification check fails.
pub const EXIT_VERIFY: i32 = 1;
/// Exit code for usage, configuration or data errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config { line: usize, message: String },
    Data(String),
    Io { path: String, source: std::io::Error },
    Bundle(String),
    Core(learnpool_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_USAGE
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Config { line, message } => write!(f, "config line {line}: {message}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Io { path, source } => write!(f, "{path}: {source}"),
            CliError::Bundle(m) => write!(f, "model bundle: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CliError::Io { source, .. } => Some(source),
            CliError::Core(e) => Some(e),
            _ => None,
        }
    }
}

impl From<learnpool_core::Error> for CliError {
    fn from(e: learnpool_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
