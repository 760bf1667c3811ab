use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid design: {0}")]
    Design(String),
    #[error("invalid study configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Fit(#[from] pairrank::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
