use thiserror::Error;

pub type Result<T> = std::result::Result<T, NeuralError>;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite activation in {0}")]
    NonFiniteActivation(&'static str),
    #[error("loss weights sum to zero")]
    ZeroWeightSum,
    #[error("dataset is empty")]
    DatasetEmpty,
    #[error("non-finite loss at step {step}")]
    DivergenceDetected { step: usize },
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("bad params file magic")]
    BadMagic,
    #[error("unsupported params file version {0}")]
    VersionMismatch(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
