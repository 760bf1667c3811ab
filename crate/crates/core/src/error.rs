use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("csv error at record {record}: {message}")]
    Csv { record: usize, message: String },

    #[error("non-finite pairwise projection for pair ({i}, {j})")]
    NonFiniteProjection { i: usize, j: usize },

    #[error("{what} requires {requirement}")]
    Unsupported {
        what: &'static str,
        requirement: String,
    },

    #[error("PDR4 objective is O(n^4); n = {n} exceeds the configured cap {cap}")]
    CostCap { n: usize, cap: usize },

    #[error("censoring indicators (`delta`) are required")]
    MissingDelta,

    #[error("singular information matrix at iteration {iteration}")]
    SingularHessian { iteration: usize },

    #[error("no convergence after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
