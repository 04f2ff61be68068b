use std::time::Instant;

use super::low_level::{AgentConstraints, SingleAgent};
use super::{MapfError, MapfProblem, MapfSolution, SolverStats};

/// Plans agents one by one in `order`, each avoiding the paths of those before.
///
/// Incomplete: fails when an early agent blocks a later one for good.
pub fn solve_prioritized(problem: &MapfProblem, order: &[usize]) -> Result<MapfSolution, MapfError> {
    problem.check()?;
    let n = problem.num_agents();
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(MapfError::Invalid("order is not a permutation of the agents".into()));
    }
    let began = Instant::now();
    let deadline = began + problem.time_budget;
    let mut res = problem.reservations();
    let horizon = problem.horizon_cap();
    let mut stats = SolverStats::default();
    let mut paths = vec![Vec::new(); n];
    for (rank, &i) in order.iter().enumerate() {
        let mut res_i = res.clone();
        for &j in &order[rank + 1..] {
            res_i.add_vertex(problem.starts[j], 0);
        }
        let cons =
            AgentConstraints::from_iter(problem.constraints.iter().filter(|(a, _)| *a == i).map(|(_, c)| c));
        let h = problem.map.distances_avoiding(problem.goals[i], res.forbidden_mask());
        let single = SingleAgent {
            map: problem.map,
            res: &res_i,
            heuristic: &h,
            start: problem.starts[i],
            goal: problem.goals[i],
            horizon,
            t0: 0,
            transient: problem.is_transient(i),
        };
        let Some(found) = single.search(&cons, None, 1.0, deadline)? else {
            return Err(MapfError::Unsolvable(format!("agent {i} is blocked by higher-priority agents")));
        };
        stats.low_level_expansions += found.expansions;
        if problem.is_transient(i) {
            res.add_path_until(&found.path, 0);
        } else {
            res.add_path(&found.path);
        }
        paths[i] = found.path;
    }
    stats.runtime = began.elapsed();
    Ok(MapfSolution::new(paths, stats))
}
