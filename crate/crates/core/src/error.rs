use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown split index {0} (expected 1..=4)")]
    UnknownSplit(usize),

    #[error("unknown configuration index {0} (expected 0..=4)")]
    UnknownConfiguration(usize),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("invalid traffic profile: {0}")]
    InvalidProfile(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("stage {stage} out of range (trace has {stages} stages)")]
    StageOutOfRange { stage: usize, stages: usize },

    #[error("episode exhausted after {0} stages")]
    EpisodeExhausted(usize),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("replay buffer holds {have} transitions, need {need}")]
    InsufficientBuffer { have: usize, need: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("nothing to export: metrics are empty")]
    EmptyMetrics,

    #[error("empty sweep")]
    EmptySweep,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
