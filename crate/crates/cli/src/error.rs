use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read data: {0}")]
    Data(pairrank::Error),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("simulation failed: {0}")]
    Simulation(pairrank_simlab::SimError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("self-test failed: {0}")]
    SelfTest(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Data(_) => 2,
            Self::Fit(_) | Self::Simulation(_) => 3,
            Self::Config(_) => 4,
            Self::Io { .. } | Self::SelfTest(_) => 1,
        }
    }
}

impl From<pairrank_simlab::SimError> for CliError {
    fn from(e: pairrank_simlab::SimError) -> Self {
        match e {
            pairrank_simlab::SimError::Design(m) | pairrank_simlab::SimError::Config(m) => Self::Config(m),
            other => Self::Simulation(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
