//! The prioritized variant, complete on well-formed instances.
//!
//! Shelf trajectories are safe and 1-robust, so their dependency graph is
//! acyclic. Assignment commits one (agent, shelf) pair at a time and plans
//! the agent with a multi-label search: to the shelf, along the trajectory
//! for as long as every entry's dependencies have a known release time, and
//! back to its start. Every committed path ends at the agent's start, so a
//! later agent can always wait until everybody else is home.

use std::time::{Instant, Duration};

use crate::decomp::{
    plan_shelf_trajectories, DecompConfig, DependencyGraph, RunOutput, RunStats, TrajectorySource,
};
use crate::domain::{Cell, ExecutionLog, GridMap, Instance, TrajectorySet, UNREACHABLE};
use crate::error::PlanFailure;
use crate::generate::starts_keep_connected;
use crate::mapf::{multi_label_astar, Label, Reservations};

/// Outcome of [`check_well_formed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WellFormedReport {
    pub distinct_starts: bool,
    /// Removing all starts but any one leaves the free cells connected.
    pub connected_without_starts: bool,
    /// A safe 1-robust shelf solution was found within the time budget.
    /// `false` is not a proof that none exists.
    pub safe_robust_found: bool,
}

impl WellFormedReport {
    pub fn is_well_formed(&self) -> bool {
        self.distinct_starts && self.connected_without_starts && self.safe_robust_found
    }
}

pub fn check_well_formed(instance: &Instance, config: &DecompConfig) -> WellFormedReport {
    let starts = instance.agents();
    let mut sorted = starts.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let distinct_starts = sorted.len() == starts.len();
    let connected_without_starts = starts_keep_connected(instance.map(), starts);
    let config = DecompConfig { one_robust: true, ..config.clone() };
    let safe_robust_found = distinct_starts && plan_shelf_trajectories(instance, &config, true).is_ok();
    WellFormedReport { distinct_starts, connected_without_starts, safe_robust_found }
}

/// A shelf segment being executed.
#[derive(Debug, Clone, Copy)]
struct Job {
    shelf: usize,
    finish: u32,
}

struct Pp<'a> {
    map: &'a GridMap,
    starts: &'a [Cell],
    paths: &'a [Vec<Cell>],
    graph: &'a DependencyGraph,
    budget: Duration,
    /// Time at which each shelf reaches each entry, as far as committed.
    reach: Vec<Vec<u32>>,
    busy: Vec<bool>,
    jobs: Vec<Option<Job>>,
    /// Every plan of every agent with its start time; the latest one rules.
    plans: Vec<Vec<(u32, Vec<Cell>)>>,
    carries: Vec<Vec<(u32, u32, usize)>>,
}

impl Pp<'_> {
    fn position(&self, agent: usize, t: u32) -> Cell {
        let (t0, path) = self.plans[agent].last().unwrap();
        crate::domain::at(path, (t - t0) as usize)
    }

    fn committed(&self, j: usize) -> usize {
        self.reach[j].len() - 1
    }

    fn release(&self, j: usize, k: usize) -> Option<u32> {
        let mut at = 0;
        for &(j2, m) in self.graph.out_edges(j, k) {
            at = at.max(*self.reach[j2].get(m)?);
        }
        Some(at)
    }

    /// Cells and release times of the next segment of shelf `j`.
    fn segment(&self, j: usize) -> Option<(Vec<Cell>, Vec<u32>)> {
        let k0 = self.committed(j);
        let path = &self.paths[j];
        let mut cells = vec![path[k0]];
        let mut not_before = vec![0];
        for k in k0 + 1..path.len() {
            let Some(r) = self.release(j, k) else { break };
            cells.push(path[k]);
            not_before.push(r);
        }
        (cells.len() > 1).then_some((cells, not_before))
    }

    fn reservations(&self, except: usize, now: u32) -> Reservations {
        let mut res = Reservations::new(self.map.num_cells(), false);
        for (i, plans) in self.plans.iter().enumerate() {
            if i == except {
                continue;
            }
            let (t0, path) = plans.last().unwrap();
            let skip = (now.saturating_sub(*t0) as usize).min(path.len() - 1);
            res.add_path_from(&path[skip..], t0 + skip as u32);
        }
        res
    }

    /// Commits pairs one at a time until no free agent or no shelf is left.
    fn assign(&mut self, now: u32) -> Result<(), PlanFailure> {
        loop {
            let free: Vec<usize> = (0..self.starts.len()).filter(|&i| self.jobs[i].is_none()).collect();
            if free.is_empty() {
                return Ok(());
            }
            let mut pairs: Vec<(u32, usize, usize)> = Vec::new();
            let mut segments = std::collections::HashMap::new();
            for j in 0..self.paths.len() {
                if self.busy[j] {
                    continue;
                }
                let Some(seg) = self.segment(j) else { continue };
                let d = self.map.distances_from(seg.0[0]);
                let ready = seg.1[1].saturating_sub(now);
                for &i in &free {
                    let dist = d[self.position(i, now)];
                    if dist != UNREACHABLE {
                        pairs.push((dist.max(ready), i, j));
                    }
                }
                segments.insert(j, seg);
            }
            pairs.sort_unstable();
            let mut committed = false;
            for (_, i, j) in pairs {
                let (cells, not_before) = segments[&j].clone();
                let len = cells.len();
                let labels = [
                    Label::Visit(cells[0]),
                    Label::Follow { cells, not_before },
                    Label::Park(self.starts[i]),
                ];
                let res = self.reservations(i, now);
                let deadline = Instant::now() + self.budget;
                let found = multi_label_astar(self.map, self.position(i, now), now, &labels, &res, deadline)
                    .map_err(|e| PlanFailure::Incomplete(format!("agent {i}, shelf {j}: {e}")))?;
                let Some(lp) = found else { continue };
                let begin = now + lp.marks[1] as u32;
                let finish = begin + len as u32 - 1;
                for q in 1..len as u32 {
                    self.reach[j].push(begin + q);
                }
                debug_assert_eq!(*lp.path.last().unwrap(), self.starts[i]);
                self.plans[i].push((now, lp.path));
                self.carries[i].push((begin, finish, j));
                self.busy[j] = true;
                self.jobs[i] = Some(Job { shelf: j, finish });
                committed = true;
                break;
            }
            if !committed {
                return Ok(());
            }
        }
    }

    fn all_committed(&self) -> bool {
        (0..self.paths.len()).all(|j| self.committed(j) + 1 >= self.paths[j].len())
    }

    fn log(&self) -> ExecutionLog {
        let end = self
            .plans
            .iter()
            .map(|p| {
                let (t0, path) = p.last().unwrap();
                *t0 as usize + path.len() - 1
            })
            .chain(self.reach.iter().map(|r| *r.last().unwrap() as usize))
            .max()
            .unwrap_or(0);
        let agent_paths = self
            .plans
            .iter()
            .map(|plans| {
                (0..=end)
                    .map(|t| {
                        let (t0, path) = plans.iter().rev().find(|(t0, _)| *t0 as usize <= t).unwrap();
                        crate::domain::at(path, t - *t0 as usize)
                    })
                    .collect()
            })
            .collect();
        let carrying = self
            .carries
            .iter()
            .map(|cs| {
                let mut row = vec![None; end + 1];
                for &(a, b, j) in cs {
                    for slot in &mut row[a as usize..b as usize] {
                        *slot = Some(j);
                    }
                }
                row
            })
            .collect();
        let shelf_paths = self
            .reach
            .iter()
            .zip(self.paths)
            .map(|(reach, path)| {
                let mut k = 0;
                (0..=end as u32)
                    .map(|t| {
                        while k + 1 < reach.len() && reach[k + 1] <= t {
                            k += 1;
                        }
                        path[k]
                    })
                    .collect()
            })
            .collect();
        ExecutionLog { agent_paths, carrying, shelf_paths }
    }
}

/// Runs the prioritized variant. Fails only if no safe 1-robust trajectories
/// are found, unless the instance is not well-formed.
pub fn run_pp(instance: &Instance, config: &DecompConfig) -> Result<RunOutput, PlanFailure> {
    let began = Instant::now();
    let config = DecompConfig { one_robust: true, ..config.clone() };
    let (trajectories, source) = plan_shelf_trajectories(instance, &config, true)?;
    let planned = Instant::now();
    let (paths, graph) = match source {
        TrajectorySource::Search => {
            let paths = trajectories.paths();
            let graph = DependencyGraph::build(&paths);
            (paths, graph)
        }
        TrajectorySource::PushAndSwap => DependencyGraph::build_without_waits(&trajectories.paths()),
    };
    if !graph.is_acyclic() {
        return Err(PlanFailure::Trajectories("dependency graph of 1-robust trajectories has a cycle".into()));
    }
    let starts = instance.agents();
    let n = starts.len();
    let mut pp = Pp {
        map: instance.map(),
        starts,
        paths: &paths,
        graph: &graph,
        budget: config.time_budget,
        reach: vec![vec![0]; paths.len()],
        busy: vec![false; paths.len()],
        jobs: vec![None; n],
        plans: starts.iter().map(|&s| vec![(0, vec![s])]).collect(),
        carries: vec![Vec::new(); n],
    };
    let mut now = 0u32;
    let mut replans = 0;
    loop {
        for i in 0..n {
            if let Some(job) = pp.jobs[i] {
                if job.finish <= now {
                    pp.busy[job.shelf] = false;
                    pp.jobs[i] = None;
                }
            }
        }
        if pp.all_committed() {
            break;
        }
        replans += 1;
        pp.assign(now)?;
        match pp.jobs.iter().flatten().map(|j| j.finish).min() {
            Some(next) => now = next,
            None => return Err(PlanFailure::Incomplete("no shelf could be assigned".into())),
        }
    }
    let log = pp.log();
    let stats = RunStats {
        makespan: log.makespan(),
        flowtime: log.flowtime(),
        total_time: began.elapsed(),
        agent_time: planned.elapsed(),
        replans,
        fallbacks: 0,
        trajectory_source: source,
    };
    let trajectories = match source {
        TrajectorySource::Search => trajectories,
        TrajectorySource::PushAndSwap => TrajectorySet::from_paths(instance, paths),
    };
    Ok(RunOutput { log, trajectories, stats })
}
