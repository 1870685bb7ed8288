use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("unknown graph `{name}`; available: {available}")]
    NotFound { name: String, available: String },

    #[error("catalog entry `{0}` failed verification against its reference values (use the override flag to load it anyway)")]
    Unverified(String),

    #[error("start rule `distinct` needs at least {agents} vertices, the graph has {vertices}")]
    InfeasiblePrior { agents: usize, vertices: usize },

    #[error("invalid behavior: {0}")]
    InvalidBehavior(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("unsupported prior: {0}")]
    UnsupportedPrior(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("advantage undefined: classical value {classical} does not exceed random value {random}")]
    UndefinedAdvantage { random: f64, classical: f64 },

    #[error("solver: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
