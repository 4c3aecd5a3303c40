use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema validation failed: {}", .0.join("; "))]
    Schema(Vec<String>),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("inference error for asset `{asset_id}`: {message}")]
    Inference {
        asset_id: String,
        message: String,
        retryable: bool,
    },

    #[error("infeasible scene: {0}")]
    Infeasible(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("group `{group_id}` failed: {source}")]
    Group {
        group_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("all candidates failed: {}", .0.join(" | "))]
    AllCandidatesFailed(Vec<String>),

    #[error("invalid value: {0}")]
    Invariant(String),

    #[error("unsupported format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Schema(_) => "schema",
            Error::Sampling(_) => "sampling",
            Error::Inference { .. } => "inference",
            Error::Infeasible(_) => "infeasible",
            Error::Evaluation(_) => "evaluation",
            Error::Group { source, .. } => source.kind(),
            Error::AllCandidatesFailed(_) => "all_candidates_failed",
            Error::Invariant(_) => "invariant",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Inference { retryable: true, .. })
    }
}
