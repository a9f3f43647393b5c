use ringforge_autodiff::TensorError;

#[derive(Debug, thiserror::Error)]
pub enum CycleGanError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid {field}: {message}")]
    Config { field: &'static str, message: String },
    #[error("{0}")]
    Shape(String),
    #[error("non-finite {term} loss at step {step}")]
    NonFinite { term: &'static str, step: u64 },
    #[error("epoch {epoch} is outside the schedule [0, {total})")]
    EpochOutOfRange { epoch: u32, total: u32 },
    #[error("image is {found:?}, model expects {expected:?}")]
    SizeMismatch { expected: (u32, u32), found: (u32, u32) },
    #[error("checkpoint does not match model: {0}")]
    CheckpointMismatch(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CycleGanError>;

pub(crate) fn config(field: &'static str, message: impl Into<String>) -> CycleGanError {
    CycleGanError::Config {
        field,
        message: message.into(),
    }
}
