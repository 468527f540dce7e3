use thiserror::Error;

use crate::grid::Cell;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("malformed map header: {0}")]
    MalformedHeader(String),
    #[error("map body does not match header: {0}")]
    DimensionMismatch(String),
    #[error("unknown cell character {ch:?} at row {row}, col {col}")]
    UnknownCellChar { ch: char, row: usize, col: usize },
    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("{requested} agents requested but the map has only {free} free cells")]
    TooManyAgents { requested: usize, free: usize },
    #[error("no reachable goal found for agent {agent} after {tries} tries")]
    NoReachableGoal { agent: usize, tries: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid state: {0}")]
    StateInvalid(String),
    #[error("path of agent {0} is empty")]
    EmptyPath(usize),
    #[error("path of agent {agent} starts at {found:?}, expected {expected:?}")]
    WrongStart { agent: usize, expected: Cell, found: Cell },
    #[error("goal {0:?} is not a free cell")]
    GoalOnObstacle(Cell),

    #[error("no plan found after {restarts} restarts")]
    Unsolved { restarts: usize },
    #[error("position {0:?} cannot reach the goal")]
    UnreachablePosition(Cell),
    #[error("agent {0} is not part of the state")]
    EgoNotInState(usize),

    #[error("bad dataset magic")]
    BadMagic,
    #[error("unsupported dataset version {0}")]
    VersionMismatch(u32),
    #[error("dataset vocabulary size {found} does not match {expected}")]
    VocabMismatch { expected: u32, found: u32 },
    #[error("corrupt dataset record: {0}")]
    CorruptRecord(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
