use std::collections::HashMap;

use thiserror::Error;

use super::collision::at;
use super::grid::Cell;
use super::instance::Instance;

/// What actually happened: per-timestep locations of agents and shelves.
///
/// `carrying[i][t] == Some(j)` means agent `i` holds shelf `j` during the
/// transition from `t` to `t + 1`. Sequences shorter than the horizon are
/// padded with their last entry (cells) or `None` (carrying).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExecutionLog {
    pub agent_paths: Vec<Vec<Cell>>,
    pub carrying: Vec<Vec<Option<usize>>>,
    pub shelf_paths: Vec<Vec<Cell>>,
}

/// Earliest timestep after which the path never changes.
pub fn completion_time(path: &[Cell]) -> usize {
    match path.last() {
        None => 0,
        Some(last) => path.iter().rposition(|c| c != last).map_or(0, |i| i + 1),
    }
}

impl ExecutionLog {
    /// Number of timesteps covered (the largest index plus one).
    pub fn horizon(&self) -> usize {
        self.agent_paths
            .iter()
            .chain(&self.shelf_paths)
            .map(Vec::len)
            .chain(self.carrying.iter().map(Vec::len))
            .max()
            .unwrap_or(0)
    }

    pub fn agent_at(&self, agent: usize, t: usize) -> Cell {
        at(&self.agent_paths[agent], t)
    }

    pub fn shelf_at(&self, shelf: usize, t: usize) -> Cell {
        at(&self.shelf_paths[shelf], t)
    }

    pub fn carried(&self, agent: usize, t: usize) -> Option<usize> {
        self.carrying[agent].get(t).copied().flatten()
    }

    pub fn completion_times(&self) -> Vec<usize> {
        self.agent_paths.iter().map(|p| completion_time(p)).collect()
    }

    pub fn makespan(&self) -> usize {
        self.completion_times().into_iter().max().unwrap_or(0)
    }

    pub fn flowtime(&self) -> usize {
        self.completion_times().into_iter().sum()
    }

    /// Pads every sequence to exactly `len` entries.
    pub fn padded(&self, len: usize) -> ExecutionLog {
        let pad = |p: &Vec<Cell>| (0..len).map(|t| at(p, t)).collect::<Vec<_>>();
        ExecutionLog {
            agent_paths: self.agent_paths.iter().map(pad).collect(),
            shelf_paths: self.shelf_paths.iter().map(pad).collect(),
            carrying: self
                .carrying
                .iter()
                .map(|c| (0..len).map(|t| c.get(t).copied().flatten()).collect())
                .collect(),
        }
    }

    /// Drops trailing timesteps in which nothing moves.
    pub fn trimmed(&self) -> ExecutionLog {
        let len = self
            .agent_paths
            .iter()
            .chain(&self.shelf_paths)
            .map(|p| completion_time(p) + 1)
            .max()
            .unwrap_or(1);
        let mut log = self.padded(len);
        for c in &mut log.carrying {
            if let Some(last) = c.last_mut() {
                *last = None;
            }
        }
        log
    }
}

/// Structural problems that make a log impossible to check.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogShapeError {
    #[error("log has {found} {what}, instance has {expected}")]
    CountMismatch { what: &'static str, expected: usize, found: usize },
    #[error("{what} {id} has an empty path")]
    EmptyPath { what: &'static str, id: usize },
    #[error("agent {agent}: carrying has {carrying} entries but path has {path}")]
    CarryingLength { agent: usize, carrying: usize, path: usize },
    #[error("agent {agent} refers to unknown shelf {shelf}")]
    UnknownShelf { agent: usize, shelf: usize },
    #[error("{what} {id} visits a cell outside the map")]
    OutOfMap { what: &'static str, id: usize },
}

/// A rule broken by an execution log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Violation {
    AgentWrongStart { agent: usize },
    ShelfWrongStart { shelf: usize },
    AgentTeleport { agent: usize, time: usize },
    ShelfTeleport { shelf: usize, time: usize },
    AgentVertexCollision { a: usize, b: usize, time: usize, cell: Cell },
    AgentEdgeCollision { a: usize, b: usize, time: usize },
    ShelfVertexCollision { a: usize, b: usize, time: usize, cell: Cell },
    ShelfEdgeCollision { a: usize, b: usize, time: usize },
    /// A shelf changed location without an agent carrying it.
    MoveWhileUncarried { shelf: usize, time: usize },
    /// An agent claims to carry a shelf that is somewhere else.
    LiftAtWrongCell { agent: usize, shelf: usize, time: usize },
    /// Carrier and shelf ended the transition at different cells.
    CarrierSeparated { agent: usize, shelf: usize, time: usize },
    CarriedTwice { shelf: usize, time: usize },
    Undelivered { shelf: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn shape(instance: &Instance, log: &ExecutionLog) -> Result<(), LogShapeError> {
    let checks = [
        ("agents", instance.num_agents(), log.agent_paths.len()),
        ("carrying sequences", instance.num_agents(), log.carrying.len()),
        ("shelves", instance.num_shelves(), log.shelf_paths.len()),
    ];
    for (what, expected, found) in checks {
        if expected != found {
            return Err(LogShapeError::CountMismatch { what, expected, found });
        }
    }
    let cells = instance.map().num_cells();
    for (what, paths) in [("agent", &log.agent_paths), ("shelf", &log.shelf_paths)] {
        for (id, p) in paths.iter().enumerate() {
            if p.is_empty() {
                return Err(LogShapeError::EmptyPath { what, id });
            }
            if p.iter().any(|&c| c >= cells) {
                return Err(LogShapeError::OutOfMap { what, id });
            }
        }
    }
    for (agent, c) in log.carrying.iter().enumerate() {
        if c.len() > log.agent_paths[agent].len() {
            return Err(LogShapeError::CarryingLength {
                agent,
                carrying: c.len(),
                path: log.agent_paths[agent].len(),
            });
        }
        if let Some(shelf) = c.iter().flatten().find(|&&s| s >= instance.num_shelves()) {
            return Err(LogShapeError::UnknownShelf { agent, shelf: *shelf });
        }
    }
    Ok(())
}

fn deck_collisions(
    paths: &[Vec<Cell>],
    horizon: usize,
    vertex: impl Fn(usize, usize, usize, Cell) -> Violation,
    edge: impl Fn(usize, usize, usize) -> Violation,
    out: &mut Vec<Violation>,
) {
    let mut occupant: HashMap<Cell, usize> = HashMap::with_capacity(paths.len());
    for t in 0..horizon {
        occupant.clear();
        for (i, p) in paths.iter().enumerate() {
            if let Some(other) = occupant.insert(at(p, t), i) {
                out.push(vertex(other, i, t, at(p, t)));
            }
        }
        if t + 1 == horizon {
            break;
        }
        for (i, p) in paths.iter().enumerate() {
            let (from, to) = (at(p, t), at(p, t + 1));
            if from == to {
                continue;
            }
            if let Some(&j) = occupant.get(&to) {
                if i < j && at(&paths[j], t + 1) == from {
                    out.push(edge(i, j, t));
                }
            }
        }
    }
}

/// Checks a log against every rule of the problem. Sequences shorter than the
/// log horizon are padded.
pub fn validate(instance: &Instance, log: &ExecutionLog) -> Result<ValidationReport, LogShapeError> {
    shape(instance, log)?;
    let map = instance.map();
    let horizon = log.horizon();
    let mut v = Vec::new();

    for (i, &start) in instance.agents().iter().enumerate() {
        if log.agent_paths[i][0] != start {
            v.push(Violation::AgentWrongStart { agent: i });
        }
    }
    for (j, shelf) in instance.shelves().iter().enumerate() {
        if log.shelf_paths[j][0] != shelf.pickup {
            v.push(Violation::ShelfWrongStart { shelf: j });
        }
    }
    for (i, p) in log.agent_paths.iter().enumerate() {
        for (t, w) in p.windows(2).enumerate() {
            if !map.step_ok(w[0], w[1]) || !map.is_free(w[1]) {
                v.push(Violation::AgentTeleport { agent: i, time: t });
            }
        }
    }
    for (j, p) in log.shelf_paths.iter().enumerate() {
        for (t, w) in p.windows(2).enumerate() {
            if !map.step_ok(w[0], w[1]) || !map.is_free(w[1]) {
                v.push(Violation::ShelfTeleport { shelf: j, time: t });
            }
        }
    }

    deck_collisions(
        &log.agent_paths,
        horizon,
        |a, b, time, cell| Violation::AgentVertexCollision { a, b, time, cell },
        |a, b, time| Violation::AgentEdgeCollision { a, b, time },
        &mut v,
    );
    deck_collisions(
        &log.shelf_paths,
        horizon,
        |a, b, time, cell| Violation::ShelfVertexCollision { a, b, time, cell },
        |a, b, time| Violation::ShelfEdgeCollision { a, b, time },
        &mut v,
    );

    let mut carrier: Vec<Option<usize>> = vec![None; instance.num_shelves()];
    for t in 0..horizon.saturating_sub(1) {
        carrier.iter_mut().for_each(|c| *c = None);
        for i in 0..instance.num_agents() {
            let Some(j) = log.carried(i, t) else { continue };
            if carrier[j].replace(i).is_some() {
                v.push(Violation::CarriedTwice { shelf: j, time: t });
            }
            if log.agent_at(i, t) != log.shelf_at(j, t) {
                v.push(Violation::LiftAtWrongCell { agent: i, shelf: j, time: t });
            } else if log.agent_at(i, t + 1) != log.shelf_at(j, t + 1) {
                v.push(Violation::CarrierSeparated { agent: i, shelf: j, time: t });
            }
        }
        for (j, c) in carrier.iter().enumerate() {
            if c.is_none() && log.shelf_at(j, t) != log.shelf_at(j, t + 1) {
                v.push(Violation::MoveWhileUncarried { shelf: j, time: t });
            }
        }
    }

    for (j, shelf) in instance.shelves().iter().enumerate() {
        if log.shelf_at(j, horizon.saturating_sub(1)) != shelf.delivery {
            v.push(Violation::Undelivered { shelf: j });
        }
    }
    Ok(ValidationReport { violations: v })
}
