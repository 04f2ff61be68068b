//! Single-agent baselines: agent 0 does all the work, everybody else stays
//! at their start.
//!
//! BASE executes safe 1-robust trajectories in lock step, one timestep of
//! every shelf before the next. PAS executes the segments of a sequential
//! Push and Swap solution in their order.

use std::time::Instant;

use crate::decomp::{plan_shelf_trajectories, DecompConfig, RunOutput, RunStats, TrajectorySource};
use crate::domain::{Cell, ExecutionLog, Instance, TrajectorySet};
use crate::error::PlanFailure;
use crate::mapf::{solve_push_and_swap, MapfProblem};

/// Timeline of the single working agent.
struct Worker<'a> {
    instance: &'a Instance,
    avoid: Vec<bool>,
    path: Vec<Cell>,
    carrying: Vec<Option<usize>>,
    shelves: Vec<Vec<Cell>>,
}

impl<'a> Worker<'a> {
    fn new(instance: &'a Instance) -> Self {
        let map = instance.map();
        let mut avoid = vec![false; map.num_cells()];
        for &s in &instance.agents()[1..] {
            avoid[s] = true;
        }
        Worker {
            instance,
            avoid,
            path: vec![instance.agents()[0]],
            carrying: Vec::new(),
            shelves: instance.pickups().into_iter().map(|p| vec![p]).collect(),
        }
    }

    fn here(&self) -> Cell {
        *self.path.last().unwrap()
    }

    fn tick(&mut self, to: Cell, carried: Option<usize>) {
        self.path.push(to);
        self.carrying.push(carried);
        for (j, s) in self.shelves.iter_mut().enumerate() {
            let c = if carried == Some(j) { to } else { *s.last().unwrap() };
            s.push(c);
        }
    }

    /// Walks beneath the shelves, around the other agents.
    fn travel(&mut self, to: Cell) -> Result<(), PlanFailure> {
        let route = self
            .instance
            .map()
            .shortest_path(self.here(), to, &self.avoid)
            .ok_or_else(|| PlanFailure::Incomplete("agent 0 cannot reach a shelf".into()))?;
        for &c in &route[1..] {
            self.tick(c, None);
        }
        Ok(())
    }

    fn carry(&mut self, shelf: usize, to: Cell) {
        debug_assert_eq!(*self.shelves[shelf].last().unwrap(), self.here());
        self.tick(to, Some(shelf));
    }

    fn finish(mut self) -> ExecutionLog {
        self.carrying.push(None);
        let mut agent_paths: Vec<Vec<Cell>> = self.instance.agents().iter().map(|&s| vec![s]).collect();
        let mut carrying = vec![Vec::new(); agent_paths.len()];
        agent_paths[0] = self.path;
        carrying[0] = self.carrying;
        ExecutionLog { agent_paths, carrying, shelf_paths: self.shelves }
    }
}

fn output(log: ExecutionLog, trajectories: TrajectorySet, began: Instant, planned: Instant, source: TrajectorySource) -> RunOutput {
    let stats = RunStats {
        makespan: log.makespan(),
        flowtime: log.flowtime(),
        total_time: began.elapsed(),
        agent_time: planned.elapsed(),
        replans: 0,
        fallbacks: 0,
        trajectory_source: source,
    };
    RunOutput { log, trajectories, stats }
}

/// Agent 0 moves every shelf one step of its trajectory before any shelf
/// takes its next step.
pub fn run_base(instance: &Instance, config: &DecompConfig) -> Result<RunOutput, PlanFailure> {
    let began = Instant::now();
    let config = DecompConfig { one_robust: true, ..config.clone() };
    let (trajectories, source) = plan_shelf_trajectories(instance, &config, true)?;
    let planned = Instant::now();
    let paths = trajectories.paths();
    let mut worker = Worker::new(instance);
    let horizon = paths.iter().map(Vec::len).max().unwrap_or(0);
    for t in 0..horizon.saturating_sub(1) {
        for (j, p) in paths.iter().enumerate() {
            let (from, to) = (crate::domain::at(p, t), crate::domain::at(p, t + 1));
            if from != to {
                worker.travel(from)?;
                worker.carry(j, to);
            }
        }
    }
    Ok(output(worker.finish(), trajectories, began, planned, source))
}

/// Agent 0 executes the segments of a Push and Swap solution, each in one
/// go, in the order the solution produced them.
pub fn run_pas(instance: &Instance, config: &DecompConfig) -> Result<RunOutput, PlanFailure> {
    let began = Instant::now();
    let problem = MapfProblem::new(instance.map(), instance.pickups(), instance.deliveries())
        .avoiding(instance.agents().to_vec())
        .time_budget(config.time_budget);
    let solution = solve_push_and_swap(&problem).map_err(|e| PlanFailure::Trajectories(e.to_string()))?;
    let planned = Instant::now();
    let mut worker = Worker::new(instance);
    for seg in &solution.segments {
        worker.travel(solution.moves[seg.first].from)?;
        for m in &solution.moves[seg.first..=seg.last] {
            worker.carry(seg.agent, m.to);
        }
    }
    let routes: Vec<Vec<Cell>> = (0..instance.num_shelves()).map(|j| solution.route(j)).collect();
    let trajectories = TrajectorySet::from_paths(instance, routes);
    Ok(output(worker.finish(), trajectories, began, planned, TrajectorySource::PushAndSwap))
}
