//! Core data model: grid, instances, shelf trajectories, execution logs and
//! the two-deck collision rules.
//!
//! Agents collide only with agents and shelves only with shelves. An agent may
//! stand under a shelf. Lifting and placing take no time, so an agent standing
//! on a shelf at `t` can carry it to a neighbour by `t + 1`.

mod collision;
mod grid;
mod instance;
mod log;
mod trajectory;

pub use collision::{at, collision_check, first_robustness_violation, pairwise_conflicts, Conflict};
pub use grid::{Cell, Coord, GridMap, UNREACHABLE};
pub use instance::{Instance, Shelf};
pub use log::{completion_time, validate, ExecutionLog, LogShapeError, ValidationReport, Violation};
pub use trajectory::{Trajectory, TrajectoryDefect, TrajectorySet};
