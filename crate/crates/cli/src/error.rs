use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or a violated precondition; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// The pipeline ran but did not meet its bar; exit code 1.
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Core(#[from] mapf_core::CoreError),
    #[error(transparent)]
    Mapgen(#[from] mapf_mapgen::MapgenError),
    #[error(transparent)]
    Neural(#[from] mapf_neural::NeuralError),
    #[error(transparent)]
    Policy(#[from] mapf_policy::PolicyError),
    #[error(transparent)]
    Bench(#[from] mapf_bench::BenchError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}
