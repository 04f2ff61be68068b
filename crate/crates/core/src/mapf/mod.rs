//! Multi-agent path finding for shelves (as virtual agents) and for free agents.
//!
//! Solvers share one problem description: starts and goals on a [`GridMap`],
//! optional hard constraints, frozen paths that must be avoided, and two
//! modes. `one_robust` forbids entering a cell that any unit occupied at the
//! previous timestep. `forbidden` cells (agent start locations in safe mode)
//! are never used.

mod cbs;
mod low_level;
mod multi_label;
mod prioritized;
mod push_swap;
mod reservation;

use std::time::Duration;

use thiserror::Error;

use crate::domain::{Cell, GridMap};

pub use cbs::solve_cbs;
pub use multi_label::{multi_label_astar, Label, LabelPath};
pub use prioritized::solve_prioritized;
pub use push_swap::{solve_push_and_swap, Move, Segment, SequentialSolution};
pub use reservation::Reservations;

/// Hard constraint on one agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    /// Must not be at `cell` at time `time`.
    Vertex { cell: Cell, time: u32 },
    /// Must not move `from -> to` between `time` and `time + 1`.
    Edge { from: Cell, to: Cell, time: u32 },
    /// Must not be at `cell` at `time` or any later time.
    VertexFrom { cell: Cell, time: u32 },
    /// Must not reach its goal for good at or before `time`.
    Length { time: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapfError {
    #[error("time budget exhausted")]
    Timeout,
    #[error("no solution: {0}")]
    Unsolvable(String),
    #[error("ill-formed problem: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverStats {
    pub low_level_expansions: u64,
    pub high_level_nodes: u64,
    pub bypasses: u64,
    pub runtime: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapfSolution {
    /// One path per agent, ending at the arrival time at its goal.
    pub paths: Vec<Vec<Cell>>,
    /// Sum over agents of arrival times.
    pub cost: usize,
    pub stats: SolverStats,
}

impl MapfSolution {
    pub(crate) fn new(paths: Vec<Vec<Cell>>, stats: SolverStats) -> Self {
        let cost = paths.iter().map(|p| path_cost(p)).sum();
        MapfSolution { paths, cost, stats }
    }
}

/// Arrival time of a path: the last time its cell differs from the final cell, plus one.
pub fn path_cost(path: &[Cell]) -> usize {
    crate::domain::completion_time(path)
}

/// A MAPF instance plus solver settings.
#[derive(Debug, Clone)]
pub struct MapfProblem<'a> {
    pub map: &'a GridMap,
    pub starts: Vec<Cell>,
    pub goals: Vec<Cell>,
    pub constraints: Vec<(usize, Constraint)>,
    pub frozen: Vec<Vec<Cell>>,
    /// Obstacles that disappear after their last entry instead of parking.
    pub vanishing: Vec<Vec<Cell>>,
    /// Agents marked here leave the map on arrival: they need not stay at
    /// their goal, but must arrive at time 1 or later.
    pub transient: Vec<bool>,
    pub one_robust: bool,
    pub forbidden: Vec<Cell>,
    pub suboptimality: f64,
    pub time_budget: Duration,
}

impl<'a> MapfProblem<'a> {
    pub fn new(map: &'a GridMap, starts: Vec<Cell>, goals: Vec<Cell>) -> Self {
        MapfProblem {
            map,
            starts,
            goals,
            constraints: Vec::new(),
            frozen: Vec::new(),
            vanishing: Vec::new(),
            transient: Vec::new(),
            one_robust: false,
            forbidden: Vec::new(),
            suboptimality: 1.0,
            time_budget: Duration::from_secs(60),
        }
    }

    pub fn with_frozen(mut self, frozen: Vec<Vec<Cell>>) -> Self {
        self.frozen = frozen;
        self
    }

    pub fn with_vanishing(mut self, paths: Vec<Vec<Cell>>) -> Self {
        self.vanishing = paths;
        self
    }

    pub fn transient_goals(mut self, transient: Vec<bool>) -> Self {
        self.transient = transient;
        self
    }

    pub fn is_transient(&self, agent: usize) -> bool {
        self.transient.get(agent).copied().unwrap_or(false)
    }

    pub fn one_robust(mut self, on: bool) -> Self {
        self.one_robust = on;
        self
    }

    /// Safe mode: the given cells are never used.
    pub fn avoiding(mut self, cells: Vec<Cell>) -> Self {
        self.forbidden = cells;
        self
    }

    pub fn suboptimality(mut self, w: f64) -> Self {
        self.suboptimality = w;
        self
    }

    pub fn time_budget(mut self, budget: Duration) -> Self {
        self.time_budget = budget;
        self
    }

    pub fn with_constraint(mut self, agent: usize, c: Constraint) -> Self {
        self.constraints.push((agent, c));
        self
    }

    pub fn num_agents(&self) -> usize {
        self.starts.len()
    }

    /// Paths longer than this are treated as failures.
    pub fn horizon_cap(&self) -> u32 {
        let base = self.map.num_free() * (self.num_agents() + 1);
        let frozen = self.frozen.iter().chain(&self.vanishing).map(Vec::len).max().unwrap_or(0);
        (base + frozen) as u32
    }

    pub fn check(&self) -> Result<(), MapfError> {
        if self.starts.len() != self.goals.len() {
            return Err(MapfError::Invalid("starts and goals differ in length".into()));
        }
        if !self.transient.is_empty() && self.transient.len() != self.starts.len() {
            return Err(MapfError::Invalid("transient flags differ in length from starts".into()));
        }
        if !(self.suboptimality >= 1.0) {
            return Err(MapfError::Invalid(format!("suboptimality {} < 1", self.suboptimality)));
        }
        let mut seen_s = std::collections::HashSet::new();
        let mut seen_g = std::collections::HashSet::new();
        for (i, (&s, &g)) in self.starts.iter().zip(&self.goals).enumerate() {
            if !self.map.is_free(s) || !self.map.is_free(g) {
                return Err(MapfError::Invalid(format!("agent {i} starts or ends on a blocked cell")));
            }
            if !seen_s.insert(s) {
                return Err(MapfError::Invalid(format!("duplicate start {:?}", self.map.coord(s))));
            }
            if !seen_g.insert(g) {
                return Err(MapfError::Invalid(format!("duplicate goal {:?}", self.map.coord(g))));
            }
            if self.forbidden.contains(&s) || self.forbidden.contains(&g) {
                return Err(MapfError::Invalid(format!("agent {i} starts or ends on a forbidden cell")));
            }
        }
        Ok(())
    }

    pub(crate) fn reservations(&self) -> Reservations {
        let mut res = Reservations::new(self.map.num_cells(), self.one_robust);
        for &c in &self.forbidden {
            res.forbid(c);
        }
        for p in &self.frozen {
            res.add_path(p);
        }
        for p in &self.vanishing {
            res.add_path_until(p, 0);
        }
        res
    }
}
