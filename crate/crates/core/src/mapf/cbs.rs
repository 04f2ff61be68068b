//! Bounded-suboptimal conflict-based search with focal lists at both levels.
//!
//! The high level orders OPEN by a lower bound: the sum of each agent's
//! shortest arrival time under its constraints plus a pairwise dependency
//! term. For every pair of agents in conflict, a small two-agent search
//! finds how much their joint cost exceeds their individual costs; the sum
//! over a greedy matching of such pairs is added.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;
use std::time::Instant;

use crate::domain::{at, Cell};

use super::low_level::{AgentConstraints, ConflictTable, Mdd, SingleAgent};
use super::reservation::Reservations;
use super::{path_cost, Constraint, MapfError, MapfProblem, MapfSolution, SolverStats};

/// Conflicts of a node whose cardinality is checked before one is picked.
const MAX_CLASSIFIED: usize = 32;
/// Conflicting pairs of a node that get a dependency estimate.
const MAX_PAIRS: usize = 48;
/// High-level nodes a two-agent search may expand.
const PAIR_NODES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Clash {
    Vertex { a: usize, b: usize, cell: Cell, time: u32 },
    Edge { a: usize, b: usize, from: Cell, to: Cell, time: u32 },
    /// `a` enters `cell` at `time + 1` while `b` was there at `time`.
    Following { a: usize, b: usize, cell: Cell, time: u32 },
    /// `b` is at `cell` at `time`, where `parked` has already stopped for good.
    Target { parked: usize, b: usize, cell: Cell, time: u32 },
}

impl Clash {
    fn time(&self) -> u32 {
        match *self {
            Clash::Vertex { time, .. } | Clash::Edge { time, .. } | Clash::Following { time, .. } | Clash::Target { time, .. } => {
                time
            }
        }
    }

    fn pair(&self) -> (usize, usize) {
        let (a, b) = match *self {
            Clash::Vertex { a, b, .. } | Clash::Edge { a, b, .. } | Clash::Following { a, b, .. } => (a, b),
            Clash::Target { parked, b, .. } => (parked, b),
        };
        (a.min(b), a.max(b))
    }
}

/// Finds conflicts between paths. A transient path is absent after its end.
fn clashes(paths: &[Vec<Cell>], transient: &[bool], robust: bool) -> Vec<Clash> {
    let is_transient = |i: usize| transient.get(i).copied().unwrap_or(false);
    let gone = |i: usize, t: usize| is_transient(i) && t >= paths[i].len();
    let parked = |i: usize, t: usize| !is_transient(i) && t + 1 >= paths[i].len();
    let horizon = paths.iter().map(Vec::len).max().unwrap_or(0);
    let mut found = Vec::new();
    let mut occ: HashMap<Cell, usize> = HashMap::new();
    let mut prev: HashMap<Cell, usize> = HashMap::new();
    for t in 0..horizon {
        occ.clear();
        for (i, p) in paths.iter().enumerate() {
            if gone(i, t) {
                continue;
            }
            let c = at(p, t);
            if let Some(&o) = occ.get(&c) {
                let time = t as u32;
                found.push(if parked(o, t) {
                    Clash::Target { parked: o, b: i, cell: c, time }
                } else if parked(i, t) {
                    Clash::Target { parked: i, b: o, cell: c, time }
                } else {
                    Clash::Vertex { a: o, b: i, cell: c, time }
                });
            } else {
                occ.insert(c, i);
            }
        }
        if t > 0 {
            for (i, p) in paths.iter().enumerate() {
                if gone(i, t) {
                    continue;
                }
                let (from, to) = (at(p, t - 1), at(p, t));
                if from == to {
                    continue;
                }
                if let Some(&o) = prev.get(&to) {
                    if o == i {
                        continue;
                    }
                    if !gone(o, t) && at(&paths[o], t) == from {
                        if i < o {
                            found.push(Clash::Edge { a: i, b: o, from, to, time: t as u32 - 1 });
                        }
                    } else if robust {
                        found.push(Clash::Following { a: i, b: o, cell: to, time: t as u32 - 1 });
                    }
                }
            }
        }
        std::mem::swap(&mut occ, &mut prev);
    }
    found
}

/// How many of the two children of a clash must get costlier: 2 for
/// cardinal, 1 for semi-cardinal, 0 otherwise.
fn cardinality(clash: &Clash, mdds: &[Option<Rc<Mdd>>]) -> u8 {
    let only = |i: usize, t: u32, c: Cell| mdds[i].as_ref().is_some_and(|m| m.only_cell(t) == Some(c));
    let (x, y) = match *clash {
        Clash::Vertex { a, b, cell, time } => (only(a, time, cell), only(b, time, cell)),
        Clash::Edge { a, b, from, to, time } => (
            only(a, time, from) && only(a, time + 1, to),
            only(b, time, to) && only(b, time + 1, from),
        ),
        Clash::Following { a, b, cell, time } => (only(a, time + 1, cell), only(b, time, cell)),
        Clash::Target { parked, time, .. } => (mdds[parked].as_ref().is_some_and(|m| m.cost <= time), false),
    };
    x as u8 + y as u8
}

/// Data shared by the main search and its two-agent searches.
struct Shared<'p> {
    problem: &'p MapfProblem<'p>,
    res: Reservations,
    heuristics: Vec<Vec<u32>>,
    horizon: u32,
    deadline: Instant,
}

impl Shared<'_> {
    fn single(&self, agent: usize) -> SingleAgent<'_> {
        let p = self.problem;
        SingleAgent {
            map: p.map,
            res: &self.res,
            heuristic: &self.heuristics[agent],
            start: p.starts[agent],
            goal: p.goals[agent],
            horizon: self.horizon,
            t0: 0,
            transient: p.is_transient(agent),
        }
    }

    /// Shortest arrival time, as counted by [`path_cost`].
    fn optimum(&self, agent: usize, mdd: &Mdd) -> u32 {
        let p = self.problem;
        if p.is_transient(agent) && p.starts[agent] == p.goals[agent] {
            0
        } else {
            mdd.cost
        }
    }
}

struct HlNode {
    constraints: Vec<(usize, Constraint)>,
    paths: Vec<Vec<Cell>>,
    mdds: Vec<Option<Rc<Mdd>>>,
    clashes: Vec<Clash>,
    cost: usize,
    lb: usize,
}

enum Outcome {
    Solved(Vec<Vec<Cell>>),
    /// Gave up at the node limit; the lower bound reached so far.
    GaveUp(usize),
    Unsolvable,
}

type PairKey = (usize, usize, Vec<Constraint>, Vec<Constraint>);

/// One conflict-based search over a subset of the problem's agents.
struct Search<'s, 'p> {
    shared: &'s Shared<'p>,
    /// Problem index of each local agent.
    agents: Vec<usize>,
    transient: Vec<bool>,
    w: f64,
    node_limit: Option<usize>,
    pairwise: bool,
    pair_cache: HashMap<PairKey, Option<u32>>,
    stats: SolverStats,
}

impl<'s, 'p> Search<'s, 'p> {
    fn new(shared: &'s Shared<'p>, agents: Vec<usize>, w: f64) -> Self {
        let transient = agents.iter().map(|&g| shared.problem.is_transient(g)).collect();
        Search {
            shared,
            agents,
            transient,
            w,
            node_limit: None,
            pairwise: true,
            pair_cache: HashMap::new(),
            stats: SolverStats::default(),
        }
    }

    fn constraints_of(constraints: &[(usize, Constraint)], agent: usize) -> AgentConstraints {
        AgentConstraints::from_iter(constraints.iter().filter(|(a, _)| *a == agent).map(|(_, c)| c))
    }

    fn plan(
        &mut self,
        agent: usize,
        constraints: &[(usize, Constraint)],
        others: &[Vec<Cell>],
    ) -> Result<Option<Vec<Cell>>, MapfError> {
        let cons = Self::constraints_of(constraints, agent);
        let mut cat = ConflictTable::new(self.shared.problem.one_robust);
        for (j, p) in others.iter().enumerate() {
            if j != agent {
                cat.add_path(p, self.transient[j]);
            }
        }
        let out = self.shared.single(self.agents[agent]).search(&cons, Some(&cat), self.w, self.shared.deadline)?;
        Ok(out.map(|r| {
            self.stats.low_level_expansions += r.expansions;
            r.path
        }))
    }

    fn mdd(&self, agent: usize, constraints: &[(usize, Constraint)]) -> Option<Rc<Mdd>> {
        self.shared.single(self.agents[agent]).mdd(&Self::constraints_of(constraints, agent)).map(Rc::new)
    }

    /// Extra joint cost of two agents over their individual optima, `None`
    /// if they cannot both reach their goals.
    fn dependency(&mut self, node: &HlNode, a: usize, b: usize) -> Result<Option<u32>, MapfError> {
        let own = |x: usize| {
            let mut v: Vec<Constraint> = node.constraints.iter().filter(|(y, _)| *y == x).map(|(_, c)| *c).collect();
            v.sort_unstable();
            v
        };
        let key = (self.agents[a], self.agents[b], own(a), own(b));
        if let Some(&d) = self.pair_cache.get(&key) {
            return Ok(d);
        }
        let mut sub = Search::new(self.shared, vec![self.agents[a], self.agents[b]], 1.0);
        sub.node_limit = Some(PAIR_NODES);
        sub.pairwise = false;
        let base: Vec<(usize, Constraint)> =
            key.2.iter().map(|&c| (0, c)).chain(key.3.iter().map(|&c| (1, c))).collect();
        let individual = [a, b]
            .iter()
            .map(|&x| node.mdds[x].as_ref().map_or(0, |m| self.shared.optimum(self.agents[x], m) as usize))
            .sum::<usize>();
        let outcome = sub.run(base)?;
        self.stats.low_level_expansions += sub.stats.low_level_expansions;
        let d = match outcome {
            Outcome::Solved(paths) => Some(paths.iter().map(|p| path_cost(p)).sum::<usize>().saturating_sub(individual) as u32),
            Outcome::GaveUp(lb) => Some(lb.saturating_sub(individual) as u32),
            Outcome::Unsolvable => None,
        };
        self.pair_cache.insert(key, d);
        Ok(d)
    }

    /// Builds a node; `None` if some agent or pair has no solution.
    fn make(
        &mut self,
        constraints: Vec<(usize, Constraint)>,
        paths: Vec<Vec<Cell>>,
        mdds: Vec<Option<Rc<Mdd>>>,
        floor: usize,
    ) -> Result<Option<HlNode>, MapfError> {
        let cost = paths.iter().map(|p| path_cost(p)).sum();
        let mut lb = 0;
        for (i, m) in mdds.iter().enumerate() {
            match m {
                Some(m) => lb += self.shared.optimum(self.agents[i], m) as usize,
                None => return Ok(None),
            }
        }
        let found = clashes(&paths, &self.transient, self.shared.problem.one_robust);
        let mut node = HlNode { constraints, paths, mdds, clashes: found, cost, lb };
        if self.pairwise {
            let mut pairs: Vec<(usize, usize)> = node.clashes.iter().map(Clash::pair).collect();
            pairs.sort_unstable();
            pairs.dedup();
            let mut weighted = Vec::new();
            for &(a, b) in pairs.iter().take(MAX_PAIRS) {
                match self.dependency(&node, a, b)? {
                    Some(0) => {}
                    Some(d) => weighted.push((Reverse(d), a, b)),
                    None => return Ok(None),
                }
            }
            weighted.sort_unstable();
            let mut used = vec![false; self.agents.len()];
            for (Reverse(d), a, b) in weighted {
                if !used[a] && !used[b] {
                    used[a] = true;
                    used[b] = true;
                    node.lb += d as usize;
                }
            }
        }
        node.lb = node.lb.max(floor);
        Ok(Some(node))
    }

    fn run(&mut self, base: Vec<(usize, Constraint)>) -> Result<Outcome, MapfError> {
        let n = self.agents.len();
        // Root: plan agents one at a time so later ones see earlier paths in the table.
        let mut paths: Vec<Vec<Cell>> = self.agents.iter().map(|&g| vec![self.shared.problem.starts[g]]).collect();
        let mut mdds = Vec::with_capacity(n);
        for i in 0..n {
            match self.plan(i, &base, &paths)? {
                Some(p) => paths[i] = p,
                None => return Ok(Outcome::Unsolvable),
            }
            mdds.push(self.mdd(i, &base));
        }
        let Some(root) = self.make(base, paths, mdds, 0)? else { return Ok(Outcome::Unsolvable) };

        let mut nodes = vec![root];
        // OPEN by lower bound; FOCAL holds open nodes within the bound, the
        // rest wait in `pending` by cost.
        let mut open: BTreeSet<(usize, usize)> = BTreeSet::from([(nodes[0].lb, 0)]);
        let mut focal: BTreeSet<(usize, Reverse<usize>)> = BTreeSet::new();
        let mut pending: BTreeSet<(usize, usize)> = BTreeSet::from([(nodes[0].cost, 0)]);
        let mut expanded = 0usize;

        while let Some(&(lb_min, first)) = open.first() {
            if Instant::now() > self.shared.deadline {
                return Err(MapfError::Timeout);
            }
            if self.node_limit.is_some_and(|l| expanded >= l) {
                return Ok(Outcome::GaveUp(lb_min));
            }
            let bound = (lb_min as f64 * self.w + 1e-9).floor() as usize;
            while let Some(&(cost, id)) = pending.first() {
                if cost > bound {
                    break;
                }
                pending.remove(&(cost, id));
                focal.insert((nodes[id].clashes.len(), Reverse(id)));
            }
            let id = match focal.first() {
                Some(&(_, Reverse(id))) => id,
                None => first,
            };
            open.remove(&(nodes[id].lb, id));
            focal.remove(&(nodes[id].clashes.len(), Reverse(id)));
            pending.remove(&(nodes[id].cost, id));
            expanded += 1;
            self.stats.high_level_nodes += 1;

            if nodes[id].clashes.is_empty() {
                return Ok(Outcome::Solved(std::mem::take(&mut nodes[id].paths)));
            }
            // Cardinal conflicts first, then the earliest.
            let clash = nodes[id]
                .clashes
                .iter()
                .take(MAX_CLASSIFIED)
                .min_by_key(|c| (Reverse(cardinality(c, &nodes[id].mdds)), c.time()))
                .copied()
                .unwrap();
            let branches: [(usize, Constraint); 2] = match clash {
                Clash::Vertex { a, b, cell, time } => {
                    [(a, Constraint::Vertex { cell, time }), (b, Constraint::Vertex { cell, time })]
                }
                Clash::Edge { a, b, from, to, time } => [
                    (a, Constraint::Edge { from, to, time }),
                    (b, Constraint::Edge { from: to, to: from, time }),
                ],
                Clash::Following { a, b, cell, time } => {
                    [(a, Constraint::Vertex { cell, time: time + 1 }), (b, Constraint::Vertex { cell, time })]
                }
                // Either the parked agent arrives later, or `b` stays off its goal from then on.
                Clash::Target { parked, b, cell, time } => {
                    [(parked, Constraint::Length { time }), (b, Constraint::VertexFrom { cell, time })]
                }
            };
            let mut children = Vec::new();
            for (agent, c) in branches {
                let mut constraints = nodes[id].constraints.clone();
                if constraints.contains(&(agent, c)) {
                    continue;
                }
                constraints.push((agent, c));
                let Some(p) = self.plan(agent, &constraints, &nodes[id].paths)? else { continue };
                let mut paths = nodes[id].paths.clone();
                paths[agent] = p;
                let mut mdds = nodes[id].mdds.clone();
                mdds[agent] = self.mdd(agent, &constraints);
                if let Some(child) = self.make(constraints, paths, mdds, nodes[id].lb)? {
                    children.push((agent, child));
                }
            }
            // Bypass: a child that is no costlier but has fewer conflicts
            // lends its path to the parent, which is not split.
            let parent = &nodes[id];
            if let Some(pos) = children
                .iter()
                .position(|(_, c)| c.cost <= parent.cost && c.clashes.len() < parent.clashes.len())
            {
                let (agent, child) = children.swap_remove(pos);
                self.stats.bypasses += 1;
                let node = &mut nodes[id];
                node.paths[agent] = child.paths[agent].clone();
                node.cost = child.cost;
                node.clashes = clashes(&node.paths, &self.transient, self.shared.problem.one_robust);
                open.insert((node.lb, id));
                pending.insert((node.cost, id));
                continue;
            }
            for (_, child) in children {
                let cid = nodes.len();
                open.insert((child.lb, cid));
                pending.insert((child.cost, cid));
                nodes.push(child);
            }
            // Free memory of expanded nodes.
            let done = &mut nodes[id];
            done.paths = Vec::new();
            done.constraints = Vec::new();
            done.mdds = Vec::new();
            done.clashes = Vec::new();
        }
        Ok(Outcome::Unsolvable)
    }
}

/// Solves the problem with a conflict-based search.
///
/// With suboptimality `w` the returned sum of costs is at most `w` times the
/// optimum among paths avoiding the frozen paths and forbidden cells.
/// In `one_robust` mode no agent enters a cell occupied at the previous
/// timestep by another agent or by a frozen path.
pub fn solve_cbs(problem: &MapfProblem) -> Result<MapfSolution, MapfError> {
    problem.check()?;
    let began = Instant::now();
    let res = problem.reservations();
    let heuristics = problem.goals.iter().map(|&g| problem.map.distances_avoiding(g, res.forbidden_mask())).collect();
    let shared = Shared {
        problem,
        res,
        heuristics,
        horizon: problem.horizon_cap(),
        deadline: began + problem.time_budget,
    };
    let mut search = Search::new(&shared, (0..problem.num_agents()).collect(), problem.suboptimality);
    let outcome = search.run(problem.constraints.clone())?;
    let mut stats = search.stats;
    stats.runtime = began.elapsed();
    match outcome {
        Outcome::Solved(paths) => Ok(MapfSolution::new(paths, stats)),
        Outcome::GaveUp(_) | Outcome::Unsolvable => Err(MapfError::Unsolvable("conflicts cannot be resolved".into())),
    }
}
