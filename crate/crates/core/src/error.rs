use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeError {
    #[error("cannot parse timestamp {0:?}")]
    Unparseable(String),
    #[error("invalid calendar date")]
    InvalidDate,
    #[error("window end precedes its start")]
    EmptyWindow,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Time(#[from] TimeError),
    #[error("{kind} {id:?} not found")]
    NotFound { kind: &'static str, id: String },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("instance too large for exhaustive search: {users} users, {repos} repos")]
    InstanceTooLarge { users: usize, repos: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("need at least {needed} vectors, got {got}")]
    TooFewVectors { needed: usize, got: usize },
    #[error("insufficient panel data: {0}")]
    InsufficientData(String),
    #[error("infeasible scenario: {0}")]
    InfeasibleScenario(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
