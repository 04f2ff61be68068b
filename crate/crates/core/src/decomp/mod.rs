//! Shelf trajectories first, then agents that carry the shelves along them.
//!
//! [`run`] plans collision-free trajectories for all shelves, turns them into
//! a [`DependencyGraph`] and then repeatedly updates agent states, assigns
//! executable shelves to free agents and moves everybody one timestep.

mod assign;
mod depgraph;
mod engine;
mod world;

use std::time::{Duration, Instant};

use crate::domain::{ExecutionLog, Instance, TrajectorySet};
use crate::error::PlanFailure;
use crate::mapf::{solve_cbs, solve_push_and_swap, MapfProblem};

pub use depgraph::{DependencyGraph, Entry};
pub use world::{find_no_move, AgentState, AgentType, World};

/// Settings shared by the decomposition planners.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompConfig {
    /// Suboptimality bound of every MAPF call.
    pub suboptimality: f64,
    /// How many timesteps ahead assignment looks for agents that become free.
    /// 0 disables the lookahead, `usize::MAX` includes every active agent.
    pub ivf_horizon: usize,
    /// Plan 1-robust shelf trajectories.
    pub one_robust: bool,
    /// Budget of each MAPF call.
    pub time_budget: Duration,
    /// When the search for shelf trajectories fails, fall back to Push and
    /// Swap with its moves scheduled in parallel.
    pub trajectory_fallback: bool,
    /// Recorded with the results. Every tie is broken by index, so runs are
    /// deterministic regardless of the seed.
    pub seed: u64,
}

impl Default for DecompConfig {
    fn default() -> Self {
        DecompConfig {
            suboptimality: 1.2,
            ivf_horizon: 8,
            one_robust: false,
            time_budget: Duration::from_secs(60),
            trajectory_fallback: true,
            seed: 0,
        }
    }
}

impl DecompConfig {
    pub fn nivf() -> Self {
        DecompConfig { ivf_horizon: 0, ..Default::default() }
    }

    pub fn ivf(k: usize) -> Self {
        DecompConfig { ivf_horizon: k, ..Default::default() }
    }

    pub fn ivf_r(k: usize) -> Self {
        DecompConfig { ivf_horizon: k, one_robust: true, ..Default::default() }
    }

    pub fn with_budget(mut self, budget: Duration) -> Self {
        self.time_budget = budget;
        self
    }

    pub fn with_suboptimality(mut self, w: f64) -> Self {
        self.suboptimality = w;
        self
    }

    pub fn with_trajectory_fallback(mut self, on: bool) -> Self {
        self.trajectory_fallback = on;
        self
    }
}

/// Which solver produced the shelf trajectories.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TrajectorySource {
    #[default]
    Search,
    PushAndSwap,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub makespan: usize,
    pub flowtime: usize,
    /// Wall-clock time of the whole run.
    pub total_time: Duration,
    /// Wall-clock time without the shelf trajectory planning.
    pub agent_time: Duration,
    /// Number of assign-and-plan calls.
    pub replans: usize,
    /// Free-agent MAPF calls that failed and were retried jointly.
    pub fallbacks: usize,
    pub trajectory_source: TrajectorySource,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: ExecutionLog,
    /// The trajectories that were executed.
    pub trajectories: TrajectorySet,
    pub stats: RunStats,
}

/// Plans trajectories for every shelf, shelves with `pickup == delivery`
/// included, since they may have to step aside.
///
/// With `safe` the agents' start cells are never used. The fallback always
/// produces 1-robust trajectories.
pub fn plan_shelf_trajectories(
    instance: &Instance,
    config: &DecompConfig,
    safe: bool,
) -> Result<(TrajectorySet, TrajectorySource), PlanFailure> {
    let mut problem = MapfProblem::new(instance.map(), instance.pickups(), instance.deliveries())
        .one_robust(config.one_robust)
        .suboptimality(config.suboptimality)
        .time_budget(config.time_budget);
    if safe {
        problem = problem.avoiding(instance.agents().to_vec());
    }
    let err = match solve_cbs(&problem) {
        Ok(solution) => return Ok((TrajectorySet::from_paths(instance, solution.paths), TrajectorySource::Search)),
        Err(e) => e,
    };
    if config.trajectory_fallback {
        if let Ok(seq) = solve_push_and_swap(&problem) {
            let paths = seq.parallel_paths();
            return Ok((TrajectorySet::from_paths(instance, paths), TrajectorySource::PushAndSwap));
        }
    }
    Err(PlanFailure::Trajectories(err.to_string()))
}

/// Runs the decomposition planner on `instance`.
pub fn run(instance: &Instance, config: &DecompConfig) -> Result<RunOutput, PlanFailure> {
    let began = Instant::now();
    let (trajectories, source) = plan_shelf_trajectories(instance, config, false)?;
    let planned = Instant::now();
    let mut out = run_with_trajectories(instance, config, trajectories, source)?;
    out.stats.total_time = began.elapsed();
    out.stats.agent_time = planned.elapsed();
    Ok(out)
}

/// Executes given shelf trajectories with the instance's agents. Waits in
/// trajectories from Push and Swap are dropped, since they only reflect
/// the order in which its moves were scheduled.
pub fn run_with_trajectories(
    instance: &Instance,
    config: &DecompConfig,
    trajectories: TrajectorySet,
    source: TrajectorySource,
) -> Result<RunOutput, PlanFailure> {
    let began = Instant::now();
    let (paths, graph) = match source {
        TrajectorySource::Search => {
            let paths = trajectories.paths();
            let graph = DependencyGraph::build(&paths);
            (paths, graph)
        }
        TrajectorySource::PushAndSwap => DependencyGraph::build_without_waits(&trajectories.paths()),
    };
    let trajectories = match source {
        TrajectorySource::Search => trajectories,
        TrajectorySource::PushAndSwap => TrajectorySet::from_paths(instance, paths.clone()),
    };
    let (log, replans, fallbacks) = engine::execute(instance, config, &paths, &graph)?;
    let stats = RunStats {
        makespan: log.makespan(),
        flowtime: log.flowtime(),
        total_time: began.elapsed(),
        agent_time: began.elapsed(),
        replans,
        fallbacks,
        trajectory_source: source,
    };
    Ok(RunOutput { log, trajectories, stats })
}
