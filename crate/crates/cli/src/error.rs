use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid `{key}`: {message}")]
    Validation { key: String, message: String },
    #[error("cannot read config: {0}")]
    ConfigIo(std::io::Error),
    #[error(transparent)]
    Numeric(#[from] fermiflow::Error),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunnerError {
    /// Process exit code: 2 for bad input, 3 for failures during the run.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Parse { .. } | RunnerError::Validation { .. } | RunnerError::ConfigIo(_) => 2,
            RunnerError::Numeric(_) | RunnerError::Io(_) => 3,
        }
    }
}
