use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{malformed} of {lines} lines are malformed; not an event archive?")]
    CorruptInput { malformed: usize, lines: usize },
    #[error("missing input {path}: {hint}")]
    MissingInput { path: PathBuf, hint: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] fakestar_core::Error),
}

pub type AppResult<T> = Result<T, AppError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> AppError {
    let path = path.into();
    move |source| AppError::Io { path, source }
}

pub(crate) fn format_err(path: impl Into<PathBuf>, message: impl ToString) -> AppError {
    AppError::Format {
        path: path.into(),
        message: message.to_string(),
    }
}
