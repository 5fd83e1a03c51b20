use std::path::PathBuf;

use thiserror::Error;

use crate::world::VertexId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),

    #[error("agent {agent} cannot move from {from} to {to}")]
    InvalidAction {
        agent: usize,
        from: VertexId,
        to: VertexId,
    },

    #[error("joint state space needs {required} state-stage entries, cap is {cap}")]
    StateSpaceTooLarge { required: u128, cap: u128 },

    #[error("stage {stage} is outside the planned horizon {horizon}")]
    StageOutOfRange { stage: u32, horizon: u32 },

    #[error("no tasks to plan for")]
    EmptyTaskSet,

    #[error("task {0} is unreachable from the agent")]
    UnreachableTask(VertexId),

    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("agent {0} has an empty priority list")]
    EmptyPriorityList(usize),

    #[error("need {required} buildings, only {available} available")]
    InsufficientBuildings { required: usize, available: usize },

    #[error("scenario {scenario}: {source}")]
    Scenario {
        scenario: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Strips [`Error::Scenario`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Scenario { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
