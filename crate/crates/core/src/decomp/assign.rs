//! Assignment of executable shelves to free agents and paths for free agents.
//!
//! Paths are only ever relied on until the next state change, at which point
//! everything is planned again. Every arrival of an assigned agent at its
//! shelf is such a change, and so is every active agent becoming free. Hence
//! assigned agents leave the map on arrival, active agents are obstacles until
//! they become free, and only agents sent to retreat cells stay put.

use std::collections::HashMap;
use std::rc::Rc;

use crate::assignment::{hungarian, CostMatrix, UNREACHABLE_COST};
use crate::domain::{Cell, GridMap, UNREACHABLE};
use crate::error::PlanFailure;
use crate::mapf::{solve_cbs, solve_prioritized, MapfProblem};

use super::world::{AgentState, AgentType, World};
use super::DecompConfig;

/// Route of a free agent, starting at the planning time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct FreePath {
    pub shelf: Option<usize>,
    pub path: Vec<Cell>,
}

/// Where active agents go until they become free.
struct Forecast {
    /// Cells from now until (and including) the time the agent becomes free.
    paths: Vec<(usize, Vec<Cell>)>,
    /// Time and cell at which each active agent becomes free.
    free_at: HashMap<usize, (u32, Cell)>,
}

pub(crate) struct Planner<'a> {
    pub map: &'a GridMap,
    pub config: &'a DecompConfig,
    dist: HashMap<Cell, Rc<Vec<u32>>>,
    pub fallbacks: usize,
}

impl<'a> Planner<'a> {
    pub fn new(map: &'a GridMap, config: &'a DecompConfig) -> Self {
        Planner { map, config, dist: HashMap::new(), fallbacks: 0 }
    }

    fn dist_to(&mut self, cell: Cell) -> Rc<Vec<u32>> {
        let map = self.map;
        self.dist.entry(cell).or_insert_with(|| Rc::new(map.distances_from(cell))).clone()
    }

    fn route(
        &self,
        starts: Vec<Cell>,
        goals: Vec<Cell>,
        transient: Vec<bool>,
        obstacles: &[Vec<Cell>],
        parked: &[Vec<Cell>],
    ) -> Option<Vec<Vec<Cell>>> {
        if starts.is_empty() {
            return Some(Vec::new());
        }
        let n = starts.len();
        let problem = MapfProblem::new(self.map, starts, goals)
            .transient_goals(transient)
            .with_vanishing(obstacles.to_vec())
            .with_frozen(parked.to_vec())
            .suboptimality(self.config.suboptimality)
            .time_budget(self.config.time_budget);
        if let Ok(sol) = solve_cbs(&problem) {
            return Some(sol.paths);
        }
        let order: Vec<usize> = (0..n).collect();
        solve_prioritized(&problem, &order).ok().map(|s| s.paths)
    }

    /// Simulates the active agents alone. Until the first state change this
    /// is exactly what happens.
    fn forecast(&self, world: &World, pos: &[Cell]) -> Forecast {
        let mut sim = world.clone();
        let mut alive: Vec<usize> = (0..pos.len()).filter(|&i| sim.states[i].is_active()).collect();
        let mut paths: HashMap<usize, Vec<Cell>> = alive.iter().map(|&i| (i, vec![pos[i]])).collect();
        let mut free_at = HashMap::new();
        let no_arrivals = vec![false; pos.len()];
        let mut t = 0u32;
        while !alive.is_empty() {
            let carried: Vec<(usize, usize)> = alive.iter().map(|&i| (i, sim.states[i].shelf.unwrap())).collect();
            sim.step();
            t += 1;
            for &(i, j) in &carried {
                paths.get_mut(&i).unwrap().push(sim.shelf_cell(j));
            }
            for i in sim.update(&no_arrivals) {
                if !sim.states[i].is_active() {
                    let j = carried.iter().find(|c| c.0 == i).unwrap().1;
                    free_at.insert(i, (t, sim.shelf_cell(j)));
                }
            }
            alive.retain(|&i| sim.states[i].is_active());
        }
        let mut paths: Vec<(usize, Vec<Cell>)> = paths.into_iter().collect();
        paths.sort_unstable();
        Forecast { paths, free_at }
    }

    /// Assigns shelves to the free agents of `world` and plans their paths.
    /// Returns one path per free agent.
    pub fn assign_and_plan(&mut self, world: &mut World, pos: &[Cell]) -> Result<Vec<(usize, FreePath)>, PlanFailure> {
        let n = pos.len();
        let m = world.trajectories.len();
        for s in world.states.iter_mut() {
            if s.kind == AgentType::Free {
                s.shelf = None;
            }
        }
        let present: Vec<usize> = (0..n).filter(|&i| !world.states[i].is_active()).collect();
        if present.is_empty() {
            return Ok(Vec::new());
        }
        let forecast = self.forecast(world, pos);
        let active_obstacles: Vec<Vec<Cell>> = forecast.paths.iter().map(|(_, p)| p.clone()).collect();

        // Agents that become free soon take part in the assignment with a delay.
        let horizon = self.config.ivf_horizon;
        let mut future: Vec<(usize, u32, Cell)> = forecast
            .free_at
            .iter()
            .filter(|(_, &(t, _))| (t as usize) <= horizon)
            .map(|(&i, &(t, c))| (i, t, c))
            .collect();
        future.sort_unstable();

        let mut taken: Vec<bool> = world.assigned_shelves();
        let mut planned: Vec<(usize, usize, Vec<Cell>)> = Vec::new();
        let mut future_assigned: Vec<(usize, usize, u32)> = Vec::new();
        let mut waiting: Vec<usize> = present.clone();
        let mut future_pool: Vec<(usize, u32, Cell)> = future;
        // Agents sent to a soft cycle wait on their shelf for the others.
        let mut gathering: Vec<usize> = Vec::new();

        for _round in 0..m.max(1) {
            if waiting.is_empty() {
                break;
            }
            let pool: Vec<(usize, u32, Cell)> = waiting
                .iter()
                .map(|&i| (i, 0, pos[i]))
                .chain(future_pool.iter().copied())
                .collect();
            let mut candidates: Vec<(usize, u32)> = (0..m)
                .filter(|&j| !taken[j] && !world.is_complete(j) && world.num_deps(j) == 0)
                .map(|j| (j, 0))
                .collect();
            if candidates.is_empty() {
                candidates = self.simulate_executable(world, &taken, &planned, &future_assigned, &forecast);
            }
            let mut cycle = false;
            if candidates.is_empty() {
                candidates = soft_cycles(world, &taken, pool.len(), n)?.into_iter().map(|j| (j, 0)).collect();
                cycle = true;
            }
            if candidates.is_empty() {
                break;
            }

            let mut costs = CostMatrix::new(pool.len(), candidates.len());
            for (c, &(j, exec)) in candidates.iter().enumerate() {
                let d = self.dist_to(world.shelf_cell(j));
                for (r, &(_, offset, cell)) in pool.iter().enumerate() {
                    let cost = if d[cell] == UNREACHABLE {
                        UNREACHABLE_COST
                    } else {
                        (offset as i64 + d[cell] as i64).max(exec as i64)
                    };
                    costs.set(r, c, cost);
                }
            }
            let matching = hungarian(&costs);
            if matching.pairs().all(|(r, c)| costs.get(r, c) >= UNREACHABLE_COST) {
                break;
            }
            let mut round: Vec<(usize, usize)> = Vec::new();
            for (r, c) in matching.pairs() {
                if costs.get(r, c) >= UNREACHABLE_COST {
                    continue;
                }
                let (agent, offset, cell) = pool[r];
                let j = candidates[c].0;
                taken[j] = true;
                if !world.states[agent].is_active() {
                    round.push((agent, j));
                } else {
                    let d = self.dist_to(world.shelf_cell(j))[cell];
                    future_assigned.push((agent, j, offset + d));
                    future_pool.retain(|f| f.0 != agent);
                }
            }
            if round.is_empty() {
                continue;
            }
            let (obstacles, parked) = split_planned(&active_obstacles, &planned, &gathering);
            let starts = round.iter().map(|&(i, _)| pos[i]).collect();
            let goals = round.iter().map(|&(_, j)| world.shelf_cell(j)).collect();
            match self.route(starts, goals, vec![!cycle; round.len()], &obstacles, &parked) {
                Some(paths) => {
                    for ((i, j), p) in round.into_iter().zip(paths) {
                        waiting.retain(|&w| w != i);
                        if cycle {
                            gathering.push(i);
                        }
                        planned.push((i, j, p));
                    }
                }
                None => {
                    // leave these agents to the retreat step and stop assigning
                    for &(_, j) in &round {
                        taken[j] = false;
                    }
                    break;
                }
            }
        }

        let leftovers = waiting;
        if let Some(result) = self.retreat(world, &forecast, &active_obstacles, &planned, &gathering, &leftovers, pos) {
            return Ok(self.commit(world, planned, result));
        }
        // Everything at once, assignments kept.
        self.fallbacks += 1;
        let everyone: Vec<usize> = planned.iter().map(|p| p.0).chain(leftovers.iter().copied()).collect();
        let assigned: Vec<(usize, usize)> = planned.iter().map(|p| (p.0, p.1)).collect();
        if let Some(out) = self.joint(world, &forecast, &active_obstacles, &assigned, &gathering, &everyone, pos) {
            return Ok(self.commit_all(world, out));
        }
        if let Some(out) = self.joint(world, &forecast, &active_obstacles, &[], &[], &everyone, pos) {
            return Ok(self.commit_all(world, out));
        }
        Err(PlanFailure::Incomplete(format!("no paths for {} free agents", everyone.len())))
    }

    fn commit(
        &self,
        world: &mut World,
        planned: Vec<(usize, usize, Vec<Cell>)>,
        retreats: Vec<(usize, Vec<Cell>)>,
    ) -> Vec<(usize, FreePath)> {
        let mut out = Vec::new();
        for (i, j, path) in planned {
            world.states[i].shelf = Some(j);
            out.push((i, FreePath { shelf: Some(j), path }));
        }
        for (i, path) in retreats {
            out.push((i, FreePath { shelf: None, path }));
        }
        out.sort_by_key(|p| p.0);
        out
    }

    fn commit_all(&self, world: &mut World, plans: Vec<(usize, FreePath)>) -> Vec<(usize, FreePath)> {
        for (i, p) in &plans {
            world.states[*i].shelf = p.shelf;
        }
        plans
    }

    /// Cells that retreating agents should not park on.
    fn blocked_for_parking(&self, world: &World, forecast: &Forecast, assigned: &[(usize, usize, &[Cell])]) -> Vec<bool> {
        let mut bad = vec![false; self.map.num_cells()];
        for &(i, _) in &forecast.paths {
            let j = world.states[i].shelf.unwrap();
            for &c in &world.trajectories[j][world.steps[j]..] {
                bad[c] = true;
            }
        }
        for &(_, j, path) in assigned {
            bad[world.shelf_cell(j)] = true;
            for &c in path {
                bad[c] = true;
            }
        }
        bad
    }

    /// Closest acceptable cell for each agent, in agent order; ties by cell index.
    fn retreat_cells(&self, agents: &[usize], pos: &[Cell], bad: &[bool], hard: &[bool]) -> Vec<Cell> {
        let mut used = hard.to_vec();
        let mut out = Vec::new();
        for &i in agents {
            let d = self.map.distances_from(pos[i]);
            let pick = |strict: bool, used: &[bool]| {
                self.map
                    .free_cells()
                    .filter(|&c| d[c] != UNREACHABLE && !used[c] && !(strict && bad[c]))
                    .min_by_key(|&c| (d[c], c))
            };
            let c = pick(true, &used).or_else(|| pick(false, &used)).unwrap_or(pos[i]);
            used[c] = true;
            out.push(c);
        }
        out
    }

    fn retreat(
        &self,
        world: &World,
        forecast: &Forecast,
        active_obstacles: &[Vec<Cell>],
        planned: &[(usize, usize, Vec<Cell>)],
        gathering: &[usize],
        leftovers: &[usize],
        pos: &[Cell],
    ) -> Option<Vec<(usize, Vec<Cell>)>> {
        if leftovers.is_empty() {
            return Some(Vec::new());
        }
        let assigned: Vec<(usize, usize, &[Cell])> = planned.iter().map(|(i, j, p)| (*i, *j, p.as_slice())).collect();
        let bad = self.blocked_for_parking(world, forecast, &assigned);
        let mut hard = vec![false; self.map.num_cells()];
        for &(_, j, _) in planned {
            hard[world.shelf_cell(j)] = true;
        }
        let goals = self.retreat_cells(leftovers, pos, &bad, &hard);
        let (obstacles, parked) = split_planned(active_obstacles, planned, gathering);
        let starts = leftovers.iter().map(|&i| pos[i]).collect();
        let paths = self.route(starts, goals, vec![false; leftovers.len()], &obstacles, &parked)?;
        Some(leftovers.iter().copied().zip(paths).collect())
    }

    fn joint(
        &self,
        world: &World,
        forecast: &Forecast,
        active_obstacles: &[Vec<Cell>],
        assigned: &[(usize, usize)],
        gathering: &[usize],
        everyone: &[usize],
        pos: &[Cell],
    ) -> Option<Vec<(usize, FreePath)>> {
        let shelf_of: HashMap<usize, usize> = assigned.iter().copied().collect();
        let rest: Vec<usize> = everyone.iter().copied().filter(|i| !shelf_of.contains_key(i)).collect();
        let goals_of: Vec<(usize, usize, &[Cell])> = assigned.iter().map(|&(i, j)| (i, j, &[][..])).collect();
        let bad = self.blocked_for_parking(world, forecast, &goals_of);
        let mut hard = vec![false; self.map.num_cells()];
        for &(_, j) in assigned {
            hard[world.shelf_cell(j)] = true;
        }
        let retreats: HashMap<usize, Cell> =
            rest.iter().copied().zip(self.retreat_cells(&rest, pos, &bad, &hard)).collect();
        let mut starts = Vec::new();
        let mut goals = Vec::new();
        let mut transient = Vec::new();
        for &i in everyone {
            starts.push(pos[i]);
            match shelf_of.get(&i) {
                Some(&j) => {
                    goals.push(world.shelf_cell(j));
                    transient.push(!gathering.contains(&i));
                }
                None => {
                    goals.push(retreats[&i]);
                    transient.push(false);
                }
            }
        }
        let paths = self.route(starts, goals, transient, active_obstacles, &[])?;
        Some(
            everyone
                .iter()
                .zip(paths)
                .map(|(&i, path)| (i, FreePath { shelf: shelf_of.get(&i).copied(), path }))
                .collect(),
        )
    }

    /// Runs the world forward with the assignments made so far and returns the
    /// unassigned shelves that become executable first, with that time.
    fn simulate_executable(
        &mut self,
        world: &World,
        taken: &[bool],
        planned: &[(usize, usize, Vec<Cell>)],
        future_assigned: &[(usize, usize, u32)],
        forecast: &Forecast,
    ) -> Vec<(usize, u32)> {
        let n = world.states.len();
        let mut sim = world.clone();
        let mut arrive = vec![u32::MAX; n];
        for (i, j, p) in planned {
            sim.states[*i] = AgentState { kind: AgentType::Free, shelf: Some(*j) };
            arrive[*i] = p.len() as u32 - 1;
        }
        // IVF agents switch to their new shelf once free
        let mut pending: HashMap<usize, (usize, u32)> = HashMap::new();
        for &(i, j, t) in future_assigned {
            pending.insert(i, (j, t));
        }
        let remaining = (0..sim.trajectories.len())
            .map(|j| sim.trajectories[j].len() - sim.steps[j])
            .sum::<usize>() as u32;
        let latest = arrive.iter().filter(|&&a| a != u32::MAX).chain(pending.values().map(|p| &p.1)).max();
        let cap = remaining + latest.copied().unwrap_or(0) + forecast.paths.len() as u32 + 2;
        for t in 1..=cap {
            sim.step();
            let at_shelf: Vec<bool> = (0..n)
                .map(|i| sim.states[i].kind == AgentType::Free && sim.states[i].shelf.is_some() && arrive[i] <= t)
                .collect();
            for i in sim.update(&at_shelf) {
                if sim.states[i].is_idle() {
                    if let Some((j, when)) = pending.remove(&i) {
                        sim.states[i].shelf = Some(j);
                        arrive[i] = when.max(t + 1);
                    }
                }
            }
            let sim_assigned = sim.assigned_shelves();
            let found: Vec<(usize, u32)> = (0..sim.trajectories.len())
                .filter(|&j| !taken[j] && !sim_assigned[j] && !sim.is_complete(j) && sim.num_deps(j) == 0)
                .map(|j| (j, t))
                .collect();
            if !found.is_empty() {
                return found;
            }
            let busy = sim.states.iter().enumerate().any(|(i, s)| {
                s.is_active() || (s.kind == AgentType::Free && s.shelf.is_some() && arrive[i] > t)
            });
            if !busy && pending.is_empty() {
                break;
            }
        }
        Vec::new()
    }
}

/// Paths of assigned agents as obstacles: those gathering for a cycle stay.
fn split_planned(
    active: &[Vec<Cell>],
    planned: &[(usize, usize, Vec<Cell>)],
    gathering: &[usize],
) -> (Vec<Vec<Cell>>, Vec<Vec<Cell>>) {
    let mut vanishing = active.to_vec();
    let mut parked = Vec::new();
    for (i, _, p) in planned {
        if gathering.contains(i) {
            parked.push(p.clone());
        } else {
            vanishing.push(p.clone());
        }
    }
    (vanishing, parked)
}

/// Unassigned shelves whose next entries form cycles of soft dependencies,
/// as whole cycles whose total size fits `pool` agents.
///
/// A cycle longer than the number of agents can never be executed.
fn soft_cycles(world: &World, taken: &[bool], pool: usize, agents: usize) -> Result<Vec<usize>, PlanFailure> {
    let m = world.trajectories.len();
    let next: Vec<Option<usize>> = (0..m)
        .map(|j| {
            if taken[j] || world.is_complete(j) {
                return None;
            }
            world.soft_target(j).filter(|&t| !taken[t])
        })
        .collect();
    // 0 unvisited, 1 on the current walk, 2 done
    let mut state = vec![0u8; m];
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    for s in 0..m {
        let mut walk = Vec::new();
        let mut cur = Some(s);
        while let Some(j) = cur {
            if state[j] != 0 {
                if state[j] == 1 {
                    let from = walk.iter().position(|&x| x == j).unwrap();
                    cycles.push(walk[from..].to_vec());
                }
                break;
            }
            state[j] = 1;
            walk.push(j);
            cur = next[j];
        }
        for j in walk {
            state[j] = 2;
        }
    }
    let mut out = Vec::new();
    for c in cycles {
        if c.len() > agents {
            return Err(PlanFailure::SmallN { cycle_len: c.len(), agents });
        }
        if out.len() + c.len() <= pool {
            out.extend(c);
        }
    }
    out.sort_unstable();
    Ok(out)
}
