//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the binary exits non-zero if any of them failed. Runs without the libtest
//! harness so the lines show up in plain `cargo test` output.

use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::cmp::Reverse;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ddmapd::assignment::{hungarian, CostMatrix};
use ddmapd::decomp::{plan_shelf_trajectories, run_with_trajectories, DecompConfig, DependencyGraph};
use ddmapd::domain::{pairwise_conflicts, validate, Cell, ExecutionLog, GridMap, Instance};
use ddmapd::fixtures::{example_instance, example_reference_log};
use ddmapd::generate::{generate, generate_warehouse, GeneratorSpec};
use ddmapd::mapf::{solve_cbs, MapfError, MapfProblem};
use ddmapd::suite::{solve, Algo, Settings};

struct Report {
    failed: Vec<String>,
}

impl Report {
    fn check(&mut self, name: &str, result: Result<String, String>) {
        match result {
            Ok(note) => println!("PASS {name}: {note}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                self.failed.push(name.to_string());
            }
        }
    }
}

fn delivers_everything(inst: &Instance, log: &ExecutionLog) -> Result<(), String> {
    let report = validate(inst, log).map_err(|e| e.to_string())?;
    if !report.is_valid() {
        return Err(format!("{:?}", report.violations.first()));
    }
    for (j, s) in inst.shelves().iter().enumerate() {
        if log.shelf_paths[j].last() != Some(&s.delivery) {
            return Err(format!("shelf {j} not delivered"));
        }
    }
    Ok(())
}

// The suboptimality the experiments use for a setting.
fn omega(size: usize, density: f64, robust: bool) -> f64 {
    if robust || density > 0.25 {
        1.8
    } else if size <= 24 {
        1.2
    } else {
        1.4
    }
}

fn settings(w: f64, budget: f64) -> Settings {
    Settings { k: 8, suboptimality: w, time_budget: Duration::from_secs_f64(budget) }
}

fn mean(xs: &[usize]) -> f64 {
    xs.iter().sum::<usize>() as f64 / xs.len().max(1) as f64
}

fn moves(path: &[Cell]) -> usize {
    path.windows(2).filter(|w| w[0] != w[1]).count()
}

fn safety() -> Result<String, String> {
    let start = Instant::now();
    let algos = [Algo::Nivf, Algo::Ivf, Algo::IvfR, Algo::Pp];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut solved, mut tried) = (0, 0);
    for i in 0..200u64 {
        let size = *[8, 12, 16].choose(&mut rng).unwrap();
        let den = *[0.2, 0.3, 0.4].choose(&mut rng).unwrap();
        let n = *[2, 4, 8].choose(&mut rng).unwrap();
        let algo = algos[i as usize % algos.len()];
        let Ok(inst) = generate(&GeneratorSpec::new(size, den, n, 1000 + i)) else { continue };
        tried += 1;
        let robust = matches!(algo, Algo::IvfR | Algo::Pp);
        if let Ok(out) = solve(algo, &inst, &settings(omega(size, den, robust), 1.0), i) {
            delivers_everything(&inst, &out.log).map_err(|e| format!("{size}/{den}/{n} {algo} seed {}: {e}", 1000 + i))?;
            solved += 1;
        }
    }
    let el = start.elapsed();
    if el > Duration::from_secs(600) {
        return Err(format!("took {el:?}"));
    }
    Ok(format!("{solved}/{tried} solved, all logs valid, {:.0}s", el.as_secs_f64()))
}

fn pp_well_formed() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut failures = Vec::new();
    for i in 0..100u64 {
        let size = rng.gen_range(12..=24);
        let n = *[4, 8].choose(&mut rng).unwrap();
        let inst = generate(&GeneratorSpec::new(size, 0.2, n, 2000 + i).well_formed()).map_err(|e| e.to_string())?;
        match solve(Algo::Pp, &inst, &settings(1.8, 2.0), i) {
            Ok(out) => delivers_everything(&inst, &out.log)?,
            Err(e) => failures.push(format!("{size}/{n}/{}: {e}", 2000 + i)),
        }
    }
    let el = start.elapsed();
    if !failures.is_empty() {
        return Err(format!("{} failures, first {}", failures.len(), failures[0]));
    }
    if el > Duration::from_secs(600) {
        return Err(format!("took {el:?}"));
    }
    Ok(format!("100/100 solved, {:.0}s", el.as_secs_f64()))
}

fn depgraph_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..100 {
        let shelves = rng.gen_range(1..=6);
        let paths: Vec<Vec<Cell>> =
            (0..shelves).map(|_| (0..rng.gen_range(1..=20)).map(|_| rng.gen_range(0..12)).collect()).collect();
        let mut want = BTreeSet::new();
        for (j, p) in paths.iter().enumerate() {
            for (k, &c) in p.iter().enumerate() {
                for (j2, q) in paths.iter().enumerate() {
                    for (k2, &c2) in q.iter().enumerate() {
                        if j != j2 && k > k2 && c == c2 && k2 + 1 < q.len() {
                            want.insert(((j, k), (j2, k2 + 1)));
                        }
                    }
                }
            }
        }
        let got: BTreeSet<_> = DependencyGraph::build(&paths).edges().into_iter().collect();
        if got != want {
            return Err(format!("case {case}: {} edges, expected {}", got.len(), want.len()));
        }
    }
    Ok("100 trajectory sets match".into())
}

fn best_matching(m: &[Vec<i64>], row: usize, used: &mut Vec<bool>, left: usize) -> i64 {
    // rows may stay unmatched only while there are more rows than columns
    if left == 0 || row == m.len() {
        return if left == 0 { 0 } else { i64::MAX };
    }
    let mut best = if m.len() - row > left { best_matching(m, row + 1, used, left) } else { i64::MAX };
    for c in 0..used.len() {
        if !used[c] {
            used[c] = true;
            let rest = best_matching(m, row + 1, used, left - 1);
            if rest != i64::MAX {
                best = best.min(rest + m[row][c]);
            }
            used[c] = false;
        }
    }
    best
}

fn hungarian_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..500 {
        let (r, c) = (rng.gen_range(1..=7), rng.gen_range(1..=7));
        let m: Vec<Vec<i64>> = (0..r).map(|_| (0..c).map(|_| rng.gen_range(0..50)).collect()).collect();
        let a = hungarian(&CostMatrix::from_rows(&m));
        let cols: BTreeSet<usize> = a.pairs().map(|(_, c)| c).collect();
        let sum: i64 = a.pairs().map(|(i, j)| m[i][j]).sum();
        let want = best_matching(&m, 0, &mut vec![false; c], r.min(c));
        if a.pairs().count() != r.min(c) || cols.len() != r.min(c) || sum != a.cost || a.cost != want {
            return Err(format!("case {case} ({r}x{c}): cost {} expected {want}", a.cost));
        }
    }
    Ok("500 matrices optimal".into())
}

type Joint = (Vec<Cell>, u32);

// Records `pos` under every subset of the agents on their goals retiring.
fn retire(goals: &[Cell], pos: Vec<Cell>, mask: u32, d: usize, heap: &mut BinaryHeap<Reverse<(usize, Joint)>>, dist: &mut HashMap<Joint, usize>) {
    let can: Vec<usize> = (0..pos.len()).filter(|&i| mask & (1 << i) == 0 && pos[i] == goals[i]).collect();
    for sub in 0..(1u32 << can.len()) {
        let mut m = mask;
        for (b, &i) in can.iter().enumerate() {
            if sub & (1 << b) != 0 {
                m |= 1 << i;
            }
        }
        let key = (pos.clone(), m);
        if dist.get(&key).map_or(true, |&old| d < old) {
            dist.insert(key.clone(), d);
            heap.push(Reverse((d, key)));
        }
    }
}

// Optimal sum of arrival times by Dijkstra over joint states. An agent may
// retire once at its goal; retired agents stay put and stop paying.
fn joint_optimum(map: &GridMap, starts: &[Cell], goals: &[Cell]) -> Option<usize> {
    let n = starts.len();
    let full = (1u32 << n) - 1;
    let mut dist: HashMap<Joint, usize> = HashMap::new();
    let mut heap = BinaryHeap::new();
    retire(goals, starts.to_vec(), 0, 0, &mut heap, &mut dist);
    while let Some(Reverse((d, (pos, mask)))) = heap.pop() {
        if dist[&(pos.clone(), mask)] < d {
            continue;
        }
        if mask == full {
            return Some(d);
        }
        let active = (0..n).filter(|&i| mask & (1 << i) == 0).count();
        let options: Vec<Vec<Cell>> = (0..n)
            .map(|i| {
                if mask & (1 << i) != 0 {
                    vec![pos[i]]
                } else {
                    std::iter::once(pos[i]).chain(map.neighbors(pos[i])).collect()
                }
            })
            .collect();
        let mut idx = vec![0; n];
        'outer: loop {
            let next: Vec<Cell> = (0..n).map(|i| options[i][idx[i]]).collect();
            let clash = (0..n).any(|a| {
                (a + 1..n).any(|b| next[a] == next[b] || (next[a] == pos[b] && next[b] == pos[a]))
            });
            if !clash {
                retire(goals, next, mask, d + active, &mut heap, &mut dist);
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

fn cbs_oracle() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut compared = 0;
    for case in 0..20 {
        let blocked: Vec<bool> = (0..25).map(|_| rng.gen_bool(0.2)).collect();
        let map = GridMap::from_blocked(5, 5, blocked).map_err(|e| e.to_string())?;
        let mut free: Vec<Cell> = map.free_cells().collect();
        let n = rng.gen_range(2..=3).min(free.len() / 2);
        free.shuffle(&mut rng);
        let starts = free[..n].to_vec();
        free.shuffle(&mut rng);
        let goals = free[..n].to_vec();
        let want = joint_optimum(&map, &starts, &goals);
        let problem = MapfProblem::new(&map, starts.clone(), goals.clone()).time_budget(Duration::from_secs(20));
        match (solve_cbs(&problem), want) {
            (Ok(sol), Some(opt)) => {
                if sol.cost != opt {
                    return Err(format!("case {case}: cbs {} optimum {opt}", sol.cost));
                }
                if !pairwise_conflicts(&sol.paths).is_empty() {
                    return Err(format!("case {case}: conflicting paths"));
                }
                for (i, p) in sol.paths.iter().enumerate() {
                    if p[0] != starts[i] || *p.last().unwrap() != goals[i] || p.windows(2).any(|w| !map.step_ok(w[0], w[1])) {
                        return Err(format!("case {case}: bad path for agent {i}"));
                    }
                }
                compared += 1;
            }
            (Err(MapfError::Unsolvable(_)), None) => {}
            (got, want) => return Err(format!("case {case}: cbs {:?} optimum {want:?}", got.map(|s| s.cost))),
        }
    }
    let el = start.elapsed();
    if el > Duration::from_secs(120) {
        return Err(format!("took {el:?}"));
    }
    Ok(format!("{compared} optimal, rest unsolvable on both sides, {:.1}s", el.as_secs_f64()))
}

fn agent_scaling() -> Result<String, String> {
    let (mut m4, mut m8) = (Vec::new(), Vec::new());
    let s = settings(omega(16, 0.2, false), 1.0);
    for seed in 0..20u64 {
        let eight = generate(&GeneratorSpec::new(16, 0.2, 8, seed)).map_err(|e| e.to_string())?;
        let four = eight.with_agents(eight.agents()[..4].to_vec()).map_err(|e| e.to_string())?;
        m4.push(solve(Algo::Ivf, &four, &s, seed).map_err(|e| e.to_string())?.stats.makespan);
        m8.push(solve(Algo::Ivf, &eight, &s, seed).map_err(|e| e.to_string())?.stats.makespan);
    }
    let (a, b) = (mean(&m4), mean(&m8));
    let note = format!("mean makespan N=4 {a:.1}, N=8 {b:.1}, ratio {:.2}", b / a);
    if b <= 0.75 * a { Ok(note) } else { Err(note) }
}

fn ivf_beats_nivf() -> Result<String, String> {
    let mut notes = Vec::new();
    let mut ok = true;
    for size in [8, 12] {
        let w = if size == 8 { 1.2 } else { 1.6 };
        let (mut n, mut i, mut better) = (Vec::new(), Vec::new(), 0);
        for seed in 0..20u64 {
            let inst = generate(&GeneratorSpec::new(size, 0.4, 4, seed)).map_err(|e| e.to_string())?;
            let cfg = DecompConfig::ivf(8).with_suboptimality(w).with_budget(Duration::from_secs(1));
            // both variants execute the same trajectories
            let (tr, src) = plan_shelf_trajectories(&inst, &cfg, false).map_err(|e| e.to_string())?;
            let nivf = DecompConfig { ivf_horizon: 0, ..cfg.clone() };
            let a = run_with_trajectories(&inst, &nivf, tr.clone(), src).map_err(|e| e.to_string())?;
            let b = run_with_trajectories(&inst, &cfg, tr, src).map_err(|e| e.to_string())?;
            n.push(a.stats.makespan);
            i.push(b.stats.makespan);
            better += usize::from(b.stats.makespan < a.stats.makespan);
        }
        ok &= mean(&i) <= mean(&n) && 2 * better >= n.len();
        notes.push(format!("size {size}: nivf {:.2} ivf {:.2}, ivf smaller on {better}/20", mean(&n), mean(&i)));
    }
    if ok { Ok(notes.join("; ")) } else { Err(notes.join("; ")) }
}

fn trajectory_bound() -> Result<String, String> {
    let mut ratios = Vec::new();
    for size in [8, 12, 16, 20, 24] {
        for seed in 0..4u64 {
            let inst = generate(&GeneratorSpec::new(size, 0.2, 4, seed)).map_err(|e| e.to_string())?;
            let Ok(out) = solve(Algo::Ivf, &inst, &settings(omega(size, 0.2, false), 1.0), seed) else { continue };
            let total: usize = out.trajectories.paths().iter().map(|p| moves(p)).sum();
            if total > out.stats.flowtime {
                return Err(format!("size {size} seed {seed}: {total} moves > flowtime {}", out.stats.flowtime));
            }
            if out.stats.flowtime > 0 {
                ratios.push(total as f64 / out.stats.flowtime as f64);
            }
        }
    }
    let r = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
    let note = format!("{} instances, mean moves/flowtime {r:.2}", ratios.len());
    if r >= 0.5 { Ok(note) } else { Err(note) }
}

fn baselines_order() -> Result<String, String> {
    let s = settings(omega(16, 0.2, false), 2.0);
    let (mut base, mut pas, mut ivfr, mut ivfr8) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for seed in 0..10u64 {
        let eight = generate(&GeneratorSpec::new(16, 0.2, 8, seed)).map_err(|e| e.to_string())?;
        let one = eight.with_agents(eight.agents()[..1].to_vec()).map_err(|e| e.to_string())?;
        let mk = |algo, inst: &Instance| -> Result<usize, String> {
            let out = solve(algo, inst, &s, seed).map_err(|e| format!("{algo} seed {seed}: {e}"))?;
            delivers_everything(inst, &out.log)?;
            Ok(out.stats.makespan)
        };
        base.push(mk(Algo::Base, &one)?);
        pas.push(mk(Algo::Pas, &one)?);
        ivfr.push(mk(Algo::IvfR, &one)?);
        ivfr8.push(mk(Algo::IvfR, &eight)?);
    }
    let (b, p, r, r8) = (mean(&base), mean(&pas), mean(&ivfr), mean(&ivfr8));
    let note = format!("base {b:.0}, pas {p:.0}, ivf-r {r:.0}, ivf-r with 8 agents {r8:.0}");
    if b > p && p >= 0.9 * r && r8 < b.min(p).min(r) { Ok(note) } else { Err(note) }
}

fn worked_example() -> Result<String, String> {
    let inst = example_instance();
    let out = solve(Algo::Ivf, &inst, &settings(1.0, 10.0), 0).map_err(|e| e.to_string())?;
    delivers_everything(&inst, &out.log)?;
    for j in [1, 2] {
        if moves(&out.log.shelf_paths[j]) == 0 {
            return Err(format!("shelf {j} never moved"));
        }
    }
    let reference = example_reference_log();
    delivers_everything(&inst, &reference)?;
    if (reference.makespan(), reference.flowtime()) != (7, 14) {
        return Err(format!("reference makespan {} flowtime {}", reference.makespan(), reference.flowtime()));
    }
    Ok(format!("solved with makespan {} flowtime {}; reference 7/14 valid", out.stats.makespan, out.stats.flowtime))
}

fn warehouse() -> Result<String, String> {
    let start = Instant::now();
    let inst = generate_warehouse(1).map_err(|e| e.to_string())?;
    let out = solve(Algo::IvfR, &inst, &settings(1.8, 10.0), 1).map_err(|e| e.to_string())?;
    delivers_everything(&inst, &out.log)?;
    let el = start.elapsed();
    if el > Duration::from_secs(300) {
        return Err(format!("took {el:?}"));
    }
    Ok(format!("{} shelves, makespan {}, {:.0}s", inst.num_shelves(), out.stats.makespan, el.as_secs_f64()))
}

fn main() {
    let mut report = Report { failed: Vec::new() };
    report.check("safety of produced logs", safety());
    report.check("pp solves well-formed instances", pp_well_formed());
    report.check("dependency graph matches brute force", depgraph_oracle());
    report.check("hungarian matches exhaustive search", hungarian_oracle());
    report.check("cbs matches joint-state search", cbs_oracle());
    report.check("more agents shorten makespan", agent_scaling());
    report.check("ivf no worse than nivf", ivf_beats_nivf());
    report.check("trajectory moves bound flowtime", trajectory_bound());
    report.check("baseline ordering", baselines_order());
    report.check("worked example", worked_example());
    report.check("warehouse layout", warehouse());
    if !report.failed.is_empty() {
        println!("acceptance: {} of 11 criteria failed: {:?}", report.failed.len(), report.failed);
        std::process::exit(1);
    }
    println!("acceptance: all 11 criteria passed");
}
