use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};

use ddmapd::domain::{first_robustness_violation, pairwise_conflicts, Cell, GridMap};
use ddmapd::mapf::{
    multi_label_astar, solve_cbs, solve_prioritized, solve_push_and_swap, Label, MapfProblem, Reservations,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Optimal sum of arrival times by Dijkstra over joint states.
///
/// An agent standing on its goal may retire for free; retired agents stay put
/// and stop costing one per timestep.
fn joint_optimum(map: &GridMap, starts: &[Cell], goals: &[Cell], robust: bool) -> Option<usize> {
    let n = starts.len();
    type State = (Vec<Cell>, u8);
    let mut dist: HashMap<State, usize> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let start: State = (starts.to_vec(), 0);
    dist.insert(start.clone(), 0);
    heap.push(Reverse((0usize, start)));
    while let Some(Reverse((d, (pos, done)))) = heap.pop() {
        if dist.get(&(pos.clone(), done)).is_some_and(|&b| b < d) {
            continue;
        }
        if done == (1u8 << n) - 1 {
            return Some(d);
        }
        let mut relax = |s: State, c: usize, heap: &mut BinaryHeap<Reverse<(usize, State)>>| {
            if dist.get(&s).is_none_or(|&b| b > c) {
                dist.insert(s.clone(), c);
                heap.push(Reverse((c, s)));
            }
        };
        for i in 0..n {
            if done & (1 << i) == 0 && pos[i] == goals[i] {
                relax((pos.clone(), done | (1 << i)), d, &mut heap);
            }
        }
        let active = (0..n).filter(|&i| done & (1 << i) == 0).count();
        let options: Vec<Vec<Cell>> = (0..n)
            .map(|i| {
                if done & (1 << i) != 0 {
                    vec![pos[i]]
                } else {
                    std::iter::once(pos[i]).chain(map.neighbors(pos[i])).collect()
                }
            })
            .collect();
        let mut idx = vec![0usize; n];
        'outer: loop {
            let next: Vec<Cell> = (0..n).map(|i| options[i][idx[i]]).collect();
            let mut ok = true;
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    if next[i] == next[j] || (next[i] == pos[j] && next[j] == pos[i]) {
                        ok = false;
                    }
                    if robust && next[i] != pos[i] && next[i] == pos[j] {
                        ok = false;
                    }
                }
            }
            // Retired agents block their goal forever, so nobody may end on it later.
            if ok {
                relax((next, done), d + active, &mut heap);
            }
            for i in 0..n {
                idx[i] += 1;
                if idx[i] < options[i].len() {
                    continue 'outer;
                }
                idx[i] = 0;
            }
            break;
        }
    }
    None
}

fn random_problem(rng: &mut ChaCha8Rng, agents: usize) -> (GridMap, Vec<Cell>, Vec<Cell>) {
    loop {
        let mut blocked = vec![false; 16];
        for _ in 0..rng.gen_range(0..4) {
            blocked[rng.gen_range(0..16)] = true;
        }
        let Ok(map) = GridMap::from_blocked(4, 4, blocked) else { continue };
        if !map.is_connected() {
            continue;
        }
        let mut free: Vec<Cell> = map.free_cells().collect();
        if free.len() < agents + 2 {
            continue;
        }
        free.shuffle(rng);
        let starts = free[..agents].to_vec();
        free.shuffle(rng);
        let goals = free[..agents].to_vec();
        return (map, starts, goals);
    }
}

fn assert_valid(map: &GridMap, starts: &[Cell], goals: &[Cell], paths: &[Vec<Cell>]) {
    assert!(pairwise_conflicts(paths).is_empty());
    for (i, p) in paths.iter().enumerate() {
        assert_eq!(p[0], starts[i]);
        assert_eq!(*p.last().unwrap(), goals[i]);
        assert!(p.windows(2).all(|w| map.step_ok(w[0], w[1])));
    }
}

#[test]
fn cbs_matches_joint_optimum_on_small_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..30 {
        let agents = 2 + case % 2;
        let (map, starts, goals) = random_problem(&mut rng, agents);
        let oracle = joint_optimum(&map, &starts, &goals, false);
        let p = MapfProblem::new(&map, starts.clone(), goals.clone()).time_budget(Duration::from_secs(5));
        match (solve_cbs(&p), oracle) {
            (Ok(sol), Some(best)) => {
                assert_valid(&map, &starts, &goals, &sol.paths);
                assert_eq!(sol.cost, best, "case {case}");
            }
            (Err(_), None) => {}
            (got, want) => panic!("case {case}: cbs {got:?}, oracle {want:?}"),
        }
    }
}

#[test]
fn robust_cbs_matches_robust_joint_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..20 {
        let (map, starts, goals) = random_problem(&mut rng, 2);
        let oracle = joint_optimum(&map, &starts, &goals, true);
        let plain = joint_optimum(&map, &starts, &goals, false);
        let p = MapfProblem::new(&map, starts.clone(), goals.clone())
            .one_robust(true)
            .time_budget(Duration::from_secs(5));
        match (solve_cbs(&p), oracle) {
            (Ok(sol), Some(best)) => {
                assert_valid(&map, &starts, &goals, &sol.paths);
                assert!(first_robustness_violation(&sol.paths).is_none());
                assert_eq!(sol.cost, best, "case {case}");
                assert!(best >= plain.unwrap());
            }
            (Err(_), None) => {}
            (got, want) => panic!("case {case}: cbs {got:?}, oracle {want:?}"),
        }
    }
}

#[test]
fn bounded_suboptimal_cbs_respects_its_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..15 {
        let (map, starts, goals) = random_problem(&mut rng, 3);
        let Some(best) = joint_optimum(&map, &starts, &goals, false) else { continue };
        let p = MapfProblem::new(&map, starts.clone(), goals.clone()).suboptimality(1.5);
        let sol = solve_cbs(&p).unwrap();
        assert_valid(&map, &starts, &goals, &sol.paths);
        assert!(sol.cost as f64 <= 1.5 * best as f64 + 1e-9);
    }
}

#[test]
fn frozen_paths_and_forbidden_cells_are_respected() {
    let map = GridMap::open(3, 5);
    let frozen = vec![vec![map.cell(0, 2), map.cell(1, 2), map.cell(2, 2)]];
    let p = MapfProblem::new(&map, vec![map.cell(1, 0)], vec![map.cell(1, 4)])
        .with_frozen(frozen.clone())
        .avoiding(vec![map.cell(0, 3)]);
    let sol = solve_cbs(&p).unwrap();
    let mut all = sol.paths.clone();
    all.extend(frozen);
    assert!(pairwise_conflicts(&all).is_empty());
    assert!(!sol.paths[0].contains(&map.cell(0, 3)));
}

#[test]
fn single_agent_at_goal_costs_nothing() {
    let map = GridMap::open(2, 2);
    let sol = solve_cbs(&MapfProblem::new(&map, vec![1], vec![1])).unwrap();
    assert_eq!(sol.paths, vec![vec![1]]);
    assert_eq!(sol.cost, 0);
}

#[test]
fn following_in_a_corridor_costs_one_wait() {
    let map = GridMap::open(1, 5);
    let p = MapfProblem::new(&map, vec![1, 0], vec![2, 1]);
    let plain = solve_cbs(&p).unwrap();
    assert_eq!(plain.cost, 2);
    let robust = solve_cbs(&p.clone().one_robust(true)).unwrap();
    assert_eq!(robust.cost, 3);
    assert!(first_robustness_violation(&robust.paths).is_none());
}

#[test]
fn prioritized_is_collision_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let (map, starts, goals) = random_problem(&mut rng, 3);
        let p = MapfProblem::new(&map, starts.clone(), goals.clone());
        if let Ok(sol) = solve_prioritized(&p, &[0, 1, 2]) {
            assert_valid(&map, &starts, &goals, &sol.paths);
        }
    }
}

#[test]
fn push_and_swap_rotates_a_ring() {
    let map = GridMap::open(2, 3);
    let cyc = [0, 1, 2, 5, 4, 3];
    let starts = vec![cyc[0], cyc[1], cyc[2], cyc[3]];
    let goals = vec![cyc[1], cyc[2], cyc[3], cyc[4]];
    let p = MapfProblem::new(&map, starts.clone(), goals.clone());
    let sol = solve_push_and_swap(&p).unwrap();
    let paths = sol.paths();
    assert_valid(&map, &starts, &goals, &paths);
    assert!(first_robustness_violation(&paths).is_none());
}

#[test]
fn push_and_swap_on_random_dense_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..40 {
        let map = GridMap::open(5, 5);
        let mut cells: Vec<Cell> = map.free_cells().collect();
        cells.shuffle(&mut rng);
        let n = rng.gen_range(1..=20);
        let starts = cells[..n].to_vec();
        cells.shuffle(&mut rng);
        let goals = cells[..n].to_vec();
        let p = MapfProblem::new(&map, starts.clone(), goals.clone());
        let sol = solve_push_and_swap(&p).unwrap();
        let paths = sol.paths();
        assert_valid(&map, &starts, &goals, &paths);
        assert!(first_robustness_violation(&paths).is_none());
    }
}

#[test]
fn multi_label_waits_for_a_crossing_unit() {
    let map = GridMap::open(3, 3);
    let mut res = Reservations::new(9, false);
    // a unit crossing the middle column top to bottom
    res.add_path(&[1, 4, 7, 8]);
    let deadline = Instant::now() + Duration::from_secs(5);
    let free = multi_label_astar(&map, 3, 0, &[Label::Park(5)], &Reservations::new(9, false), deadline)
        .unwrap()
        .unwrap();
    let out = multi_label_astar(&map, 3, 0, &[Label::Park(5)], &res, deadline).unwrap().unwrap();
    assert_eq!(free.path.len() - 1, 2);
    assert_eq!(out.path.len() - 1, 3);
    let mut all = vec![out.path.clone(), vec![1, 4, 7, 8]];
    all[0].push(5);
    assert!(pairwise_conflicts(&all).is_empty());
}

#[test]
fn push_and_swap_on_random_obstacle_maps() {
    let (mut tried, mut solved) = (0, 0);
    for seed in 0..300u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h, w) = (rng.gen_range(3..8), rng.gen_range(3..8));
        let mut blocked = vec![false; h * w];
        for _ in 0..rng.gen_range(0..(h * w / 5)) {
            blocked[rng.gen_range(0..h * w)] = true;
        }
        let Ok(map) = GridMap::from_blocked(h, w, blocked) else { continue };
        let mut cells: Vec<Cell> = map.free_cells().collect();
        if !map.is_connected() || cells.len() < 6 {
            continue;
        }
        let n = rng.gen_range(1..=cells.len() - 4);
        cells.shuffle(&mut rng);
        let starts = cells[..n].to_vec();
        cells.shuffle(&mut rng);
        let goals = cells[..n].to_vec();
        tried += 1;
        if let Ok(sol) = solve_push_and_swap(&MapfProblem::new(&map, starts.clone(), goals.clone())) {
            let paths = sol.paths();
            assert_valid(&map, &starts, &goals, &paths);
            assert!(first_robustness_violation(&paths).is_none());
            solved += 1;
        }
    }
    assert!(solved * 100 >= tried * 98, "{solved}/{tried}");
}

#[test]
fn transient_agents_leave_on_arrival() {
    let map = GridMap::open(1, 3);
    let p = MapfProblem::new(&map, vec![0, 2], vec![1, 0]).time_budget(Duration::from_secs(2));
    assert!(solve_cbs(&p).is_err());
    let sol = solve_cbs(&p.clone().transient_goals(vec![true, false])).unwrap();
    assert_eq!(sol.paths[0], vec![0, 1]);
    assert_eq!(sol.paths[1], vec![2, 2, 1, 0]);
    let pri = solve_prioritized(&p.transient_goals(vec![true, false]), &[0, 1]).unwrap();
    assert_eq!(pri.paths[1], vec![2, 2, 1, 0]);
}

#[test]
fn transient_agent_on_its_goal_still_takes_a_step() {
    let map = GridMap::open(2, 2);
    let p = MapfProblem::new(&map, vec![1], vec![1]).transient_goals(vec![true]);
    assert_eq!(solve_cbs(&p).unwrap().paths, vec![vec![1, 1]]);
}

#[test]
fn vanishing_obstacles_free_their_cells() {
    let map = GridMap::open(1, 3);
    // an obstacle stepping onto the goal at time 1 and leaving after it
    let p = MapfProblem::new(&map, vec![0], vec![2]).with_vanishing(vec![vec![1, 2]]);
    let sol = solve_cbs(&p).unwrap();
    assert_eq!(sol.paths[0], vec![0, 1, 2]);
}
