use std::collections::BTreeSet;

use crate::domain::{at, Cell, ExecutionLog, Instance};
use crate::error::PlanFailure;

use super::assign::{FreePath, Planner};
use super::depgraph::DependencyGraph;
use super::world::World;
use super::DecompConfig;

/// The main loop: update, replan on change, move. Returns the log, the number
/// of replans and the number of joint fallbacks.
pub(crate) fn execute(
    instance: &Instance,
    config: &DecompConfig,
    paths: &[Vec<Cell>],
    graph: &DependencyGraph,
) -> Result<(ExecutionLog, usize, usize), PlanFailure> {
    let n = instance.num_agents();
    let map = instance.map();
    let mut world = World::new(paths, graph, n);
    let mut planner = Planner::new(map, config);
    let mut pos: Vec<Cell> = instance.agents().to_vec();
    // path and the time it starts at
    let mut routes: Vec<Option<(usize, FreePath)>> = vec![None; n];
    let mut log = ExecutionLog {
        agent_paths: pos.iter().map(|&c| vec![c]).collect(),
        carrying: vec![Vec::new(); n],
        shelf_paths: paths.iter().map(|p| vec![p[0]]).collect(),
    };
    let mut replans = 0;
    let mut prev_exec: BTreeSet<usize> = BTreeSet::new();
    let stall_limit = 4 * map.num_cells() + 100;
    let mut last_progress = 0usize;
    let mut t = 0usize;

    while !world.all_complete() {
        let at_shelf: Vec<bool> = (0..n)
            .map(|i| {
                let s = world.states[i];
                !s.is_active() && s.shelf.is_some_and(|j| world.shelf_cell(j) == pos[i])
            })
            .collect();
        let changed = world.update(&at_shelf);
        for &i in &changed {
            if world.states[i].is_active() {
                routes[i] = None;
            }
        }
        let exec: BTreeSet<usize> = world.executable_unassigned().into_iter().collect();
        let idle = world.states.iter().any(|s| s.is_idle());
        let fresh = exec.iter().any(|j| !prev_exec.contains(j));
        if t == 0 || !changed.is_empty() || (idle && fresh) {
            replans += 1;
            let plans = planner.assign_and_plan(&mut world, &pos)?;
            for (i, plan) in plans {
                routes[i] = Some((t, plan));
            }
        }
        prev_exec = world.executable_unassigned().into_iter().collect();

        for i in 0..n {
            let s = world.states[i];
            log.carrying[i].push(if s.is_active() { s.shelf } else { None });
        }
        let before = world.steps.clone();
        world.step();
        t += 1;
        for i in 0..n {
            let s = world.states[i];
            pos[i] = match (s.is_active(), s.shelf, &routes[i]) {
                (true, Some(j), _) => world.shelf_cell(j),
                (false, _, Some((t0, plan))) => at(&plan.path, t - t0),
                _ => pos[i],
            };
            log.agent_paths[i].push(pos[i]);
        }
        for (j, p) in log.shelf_paths.iter_mut().enumerate() {
            p.push(world.shelf_cell(j));
        }
        if world.steps != before {
            last_progress = t;
        }
        if t - last_progress > stall_limit {
            return Err(stall_reason(&world, n));
        }
    }
    for c in &mut log.carrying {
        c.push(None);
    }
    Ok((log, replans, planner.fallbacks))
}

fn stall_reason(world: &World, agents: usize) -> PlanFailure {
    let m = world.trajectories.len();
    // longest chain of soft dependencies that closes into a cycle
    for s in 0..m {
        let mut seen = vec![s];
        let mut cur = s;
        while let Some(next) = world.soft_target(cur) {
            if next == s {
                if seen.len() > agents {
                    return PlanFailure::SmallN { cycle_len: seen.len(), agents };
                }
                break;
            }
            if seen.contains(&next) {
                break;
            }
            seen.push(next);
            cur = next;
        }
    }
    PlanFailure::Incomplete("no shelf moved for too long".into())
}
