use thiserror::Error;

pub type Result<T> = std::result::Result<T, MlabsError>;

#[derive(Debug, Error)]
pub enum MlabsError {
    #[error("invalid knot sequence: {0}")]
    InvalidKnots(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A knot or atom proposal could not be formed; the sampler treats this as a skipped move.
    #[error("proposal error: {0}")]
    Proposal(String),

    #[error("state error: {0}")]
    State(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl MlabsError {
    /// Process exit code: 1 for bad input or configuration, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            MlabsError::InvalidKnots(_)
            | MlabsError::Input(_)
            | MlabsError::Config(_)
            | MlabsError::Io(_)
            | MlabsError::Csv(_)
            | MlabsError::Json(_)
            | MlabsError::Toml(_) => 1,
            MlabsError::Proposal(_) | MlabsError::State(_) | MlabsError::Numerical(_) => 2,
        }
    }
}
