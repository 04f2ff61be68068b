use std::path::PathBuf;

use thiserror::Error;

use crate::domain::Coord;

/// Problems reading or writing the on-disk formats.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed map: {0}")]
    Map(String),
    #[error("malformed json in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed log: {0}")]
    Log(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// Violations of the instance invariants, detected when an instance is built.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("location {0} is outside the map")]
    OutOfBounds(Coord),
    #[error("location {0} is blocked")]
    Blocked(Coord),
    #[error("free cells of the map are not connected")]
    Disconnected,
    #[error("fewer shelves ({shelves}) than agents ({agents})")]
    TooFewShelves { shelves: usize, agents: usize },
    #[error("no agents")]
    NoAgents,
    #[error("duplicate {what} location {at}")]
    Duplicate { what: &'static str, at: Coord },
}

/// Why a planner failed, tagged with the categories used in the benchmark tables.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanFailure {
    /// (a) The shelf trajectory solver exhausted its time budget or found no solution.
    #[error("(a) shelf trajectory planning failed: {0}")]
    Trajectories(String),
    /// (b) A cycle of soft dependencies needs more agents than available.
    #[error("(b) soft-dependency cycle of {cycle_len} shelves exceeds {agents} agents")]
    SmallN { cycle_len: usize, agents: usize },
    /// (c) Paths for free agents could not be planned.
    #[error("(c) free-agent path planning failed: {0}")]
    Incomplete(String),
}

impl PlanFailure {
    /// Single-letter tag used in the CLI and CSV output.
    pub fn tag(&self) -> char {
        match self {
            PlanFailure::Trajectories(_) => 'a',
            PlanFailure::SmallN { .. } => 'b',
            PlanFailure::Incomplete(_) => 'c',
        }
    }
}
