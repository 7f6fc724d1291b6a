use std::path::PathBuf;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] bubblelink::Error),

    #[error("{source_name}: line {line}: {message}")]
    ConfigLine {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("config key `{key}`: {message}")]
    ConfigKey { key: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn key(key: &str, message: impl Into<String>) -> Self {
        CliError::ConfigKey {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for I/O failures, 2 for everything the user can fix in their inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Core(e) if e.is_io() => 1,
            _ => 2,
        }
    }
}
