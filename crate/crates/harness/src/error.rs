use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{what} = {value} exceeds the cap limit {limit}")]
    CapExceeded { what: &'static str, value: usize, limit: usize },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] specrep::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type HarnessResult<T> = Result<T, HarnessError>;
