use std::collections::HashMap;

use super::collision::{at, first_robustness_violation};
use super::grid::{Cell, GridMap};
use super::instance::Instance;

/// Planned timed locations of one shelf, from pickup to delivery.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub shelf: usize,
    pub cells: Vec<Cell>,
}

impl Trajectory {
    /// Number of steps (entries minus one).
    pub fn len(&self) -> usize {
        self.cells.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.cells.len() <= 1
    }

    pub fn at(&self, step: usize) -> Cell {
        at(&self.cells, step)
    }

    pub fn last_step(&self) -> usize {
        self.cells.len() - 1
    }
}

/// Trajectories for every shelf of an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectorySet {
    pub trajectories: Vec<Trajectory>,
    pub is_1robust: bool,
    pub is_safe: bool,
}

/// Ways a trajectory set can be inconsistent with its instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrajectoryDefect {
    WrongEndpoints { shelf: usize },
    Jump { shelf: usize, step: usize },
    VertexCollision { a: usize, b: usize, time: usize },
    EdgeCollision { a: usize, b: usize, time: usize },
    NotRobust { mover: usize, occupant: usize, time: usize },
    UsesAgentStart { shelf: usize, step: usize },
}

impl TrajectorySet {
    /// Wraps raw per-shelf paths, computing the robustness and safety flags.
    pub fn from_paths(instance: &Instance, paths: Vec<Vec<Cell>>) -> Self {
        let is_1robust = first_robustness_violation(&paths).is_none();
        let starts: Vec<Cell> = instance.agents().to_vec();
        let is_safe = paths.iter().all(|p| p.iter().all(|c| !starts.contains(c)));
        let trajectories = paths
            .into_iter()
            .enumerate()
            .map(|(shelf, cells)| Trajectory { shelf, cells })
            .collect();
        TrajectorySet { trajectories, is_1robust, is_safe }
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn get(&self, shelf: usize) -> &Trajectory {
        &self.trajectories[shelf]
    }

    pub fn paths(&self) -> Vec<Vec<Cell>> {
        self.trajectories.iter().map(|t| t.cells.clone()).collect()
    }

    /// Sum of trajectory lengths, a lower bound on the flowtime of any execution.
    pub fn total_steps(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn horizon(&self) -> usize {
        self.trajectories.iter().map(|t| t.cells.len()).max().unwrap_or(0)
    }

    /// Every defect, in ascending time order.
    pub fn defects(&self, instance: &Instance) -> Vec<TrajectoryDefect> {
        let map: &GridMap = instance.map();
        let mut out = Vec::new();
        for (j, traj) in self.trajectories.iter().enumerate() {
            let shelf = instance.shelves()[j];
            if traj.cells.first() != Some(&shelf.pickup) || traj.cells.last() != Some(&shelf.delivery) {
                out.push(TrajectoryDefect::WrongEndpoints { shelf: j });
            }
            for (k, w) in traj.cells.windows(2).enumerate() {
                if !map.step_ok(w[0], w[1]) {
                    out.push(TrajectoryDefect::Jump { shelf: j, step: k });
                }
            }
            if self.is_safe {
                for (k, c) in traj.cells.iter().enumerate() {
                    if instance.agents().contains(c) {
                        out.push(TrajectoryDefect::UsesAgentStart { shelf: j, step: k });
                    }
                }
            }
        }
        let horizon = self.horizon();
        let mut occupant: HashMap<Cell, usize> = HashMap::new();
        for t in 0..horizon {
            occupant.clear();
            for (j, traj) in self.trajectories.iter().enumerate() {
                if let Some(other) = occupant.insert(traj.at(t), j) {
                    out.push(TrajectoryDefect::VertexCollision { a: other, b: j, time: t });
                }
            }
            if t + 1 < horizon {
                for (j, traj) in self.trajectories.iter().enumerate() {
                    let (from, to) = (traj.at(t), traj.at(t + 1));
                    if from == to {
                        continue;
                    }
                    if let Some(&other) = occupant.get(&to) {
                        let o = &self.trajectories[other];
                        if other != j && o.at(t + 1) == from && j < other {
                            out.push(TrajectoryDefect::EdgeCollision { a: j, b: other, time: t });
                        }
                    }
                }
            }
        }
        if self.is_1robust {
            if let Some((mover, occupant, time)) = first_robustness_violation(&self.paths()) {
                out.push(TrajectoryDefect::NotRobust { mover, occupant, time });
            }
        }
        out
    }
}
