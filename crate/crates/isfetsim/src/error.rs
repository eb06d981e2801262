use std::io;

/// Failure of a CLI command. Each variant maps to one exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Netlist or CSV could not be parsed.
    #[error("{0}")]
    Parse(String),
    /// Bad arguments, overrides or names.
    #[error("{0}")]
    Usage(String),
    /// Newton failed, or too many sweep points failed.
    #[error("{0}")]
    Solve(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Usage(_) => 1,
            CliError::Solve(_) => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub fn io(path: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn stdout(source: io::Error) -> Self {
        Self::io("<stdout>", source)
    }
}
