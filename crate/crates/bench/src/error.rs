use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("suite config: {0}")]
    Config(String),
    #[error("params incompatible: {0}")]
    ParamsIncompatible(String),
    #[error("malformed results CSV: {0}")]
    Csv(String),
    #[error("empty result")]
    EmptyResult,
    #[error(transparent)]
    Core(#[from] mapf_core::CoreError),
    #[error(transparent)]
    Mapgen(#[from] mapf_mapgen::MapgenError),
    #[error(transparent)]
    Policy(#[from] mapf_policy::PolicyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
