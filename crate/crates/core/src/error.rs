use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("feature value {0} outside [0, 1]; normalize inputs first")]
    FeatureOutOfRange(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("label vector is not one-hot")]
    NotOneHot,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("model has no votes; train before predicting")]
    Untrained,

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("data file not found: {path}\n{hint}")]
    MissingData { path: PathBuf, hint: String },

    #[error("class {class} has {count} samples; at least {min} required for a stratified split")]
    ClassTooSmall { class: usize, count: usize, min: usize },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("statistic undefined: {0}")]
    Degenerate(&'static str),

    #[error("missing experiment results: {0}")]
    MissingExperiment(String),

    #[error("manifest verification failed for: {}", .0.join(", "))]
    Verification(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Verification(_) => 3,
            Error::InvalidConfig(_) | Error::InvalidArgument(_) => 1,
            _ => 2,
        }
    }
}
