//! Single-agent space-time focal search.
//!
//! With suboptimality `w`, returns a path whose arrival time is at most `w`
//! times the smallest f-value left in OPEN at termination. Among nodes inside
//! that bound the search prefers fewer conflicts with the other agents'
//! current paths. With `w = 1` it is plain A* with conflict-count tie
//! breaking.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::time::Instant;

use crate::domain::{Cell, GridMap};

use super::reservation::{ekey, vkey, Reservations};
use super::{Constraint, MapfError};

/// Constraints of one agent, indexed for lookup.
#[derive(Debug, Clone, Default)]
pub(crate) struct AgentConstraints {
    vertex: HashSet<u64>,
    edge: HashSet<(u64, u32)>,
    vertex_times: HashMap<Cell, u32>,
    banned_from: HashMap<Cell, u32>,
    min_goal_time: u32,
    max_time: u32,
}

impl AgentConstraints {
    pub fn from_iter<'c>(it: impl IntoIterator<Item = &'c Constraint>) -> Self {
        let mut out = AgentConstraints::default();
        for c in it {
            out.add(*c);
        }
        out
    }

    pub fn add(&mut self, c: Constraint) {
        match c {
            Constraint::Vertex { cell, time } => {
                self.vertex.insert(vkey(cell, time));
                let e = self.vertex_times.entry(cell).or_insert(time);
                *e = (*e).max(time);
                self.max_time = self.max_time.max(time);
            }
            Constraint::Edge { from, to, time } => {
                self.edge.insert(ekey(from, to, time));
                self.max_time = self.max_time.max(time + 1);
            }
            Constraint::VertexFrom { cell, time } => {
                let e = self.banned_from.entry(cell).or_insert(time);
                *e = (*e).min(time);
                self.max_time = self.max_time.max(time);
            }
            Constraint::Length { time } => {
                self.min_goal_time = self.min_goal_time.max(time + 1);
                self.max_time = self.max_time.max(time + 1);
            }
        }
    }

    #[inline]
    fn forbids(&self, from: Cell, to: Cell, t: u32) -> bool {
        self.vertex.contains(&vkey(to, t + 1))
            || (from != to && self.edge.contains(&ekey(from, to, t)))
            || self.banned_from.get(&to).is_some_and(|&b| t + 1 >= b)
    }

    /// Earliest time the agent may arrive at `goal` and stay, if it may at all.
    fn goal_time(&self, goal: Cell) -> Option<u32> {
        if self.banned_from.contains_key(&goal) {
            return None;
        }
        Some(self.vertex_times.get(&goal).map_or(0, |&t| t + 1).max(self.min_goal_time))
    }
}

/// Conflict avoidance table built from the other agents' paths.
#[derive(Debug, Default)]
pub(crate) struct ConflictTable {
    vertex: HashMap<u64, u16>,
    parked: HashMap<Cell, Vec<u32>>,
    moves: HashMap<(u64, u32), u16>,
    robust: bool,
    last_time: u32,
}

impl ConflictTable {
    pub fn new(robust: bool) -> Self {
        ConflictTable { robust, ..Default::default() }
    }

    /// Adds a path; a transient path leaves the map after its last entry.
    pub fn add_path(&mut self, path: &[Cell], transient: bool) {
        let Some(&last) = path.last() else { return };
        let keep = if transient { path.len() } else { path.len() - 1 };
        for (k, &c) in path.iter().enumerate().take(keep) {
            let t = k as u32;
            *self.vertex.entry(vkey(c, t)).or_default() += 1;
            if path.get(k + 1).is_some_and(|&n| n != c) {
                *self.moves.entry(ekey(c, path[k + 1], t)).or_default() += 1;
            }
        }
        let from = path.len() as u32 - 1;
        if !transient {
            self.parked.entry(last).or_default().push(from);
        }
        self.last_time = self.last_time.max(from);
    }

    #[inline]
    fn at(&self, cell: Cell, t: u32) -> u32 {
        let v = self.vertex.get(&vkey(cell, t)).copied().unwrap_or(0) as u32;
        let p = self.parked.get(&cell).map_or(0, |ts| ts.iter().filter(|&&f| f <= t).count() as u32);
        v + p
    }

    #[inline]
    fn count_move(&self, from: Cell, to: Cell, t: u32) -> u32 {
        let mut n = self.at(to, t + 1);
        if from != to {
            n += self.moves.get(&ekey(to, from, t)).copied().unwrap_or(0) as u32;
            if self.robust {
                n += self.at(to, t) + self.at(from, t + 1);
            }
        }
        n
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    cell: Cell,
    g: u32,
    f: u32,
    conflicts: u32,
    parent: u32,
    closed: bool,
    dead: bool,
}

const NO_PARENT: u32 = u32::MAX;

pub(crate) struct SearchResult {
    pub path: Vec<Cell>,
    pub expansions: u64,
}

/// Inputs fixed for one agent.
pub(crate) struct SingleAgent<'a> {
    pub map: &'a GridMap,
    pub res: &'a Reservations,
    pub heuristic: &'a [u32],
    pub start: Cell,
    pub goal: Cell,
    pub horizon: u32,
    /// Time of the start cell (paths are indexed from this time).
    pub t0: u32,
    /// Leaves the map on arrival instead of staying at the goal.
    pub transient: bool,
}

/// Layers of the multi-valued decision diagram of an agent: every cell it
/// may occupy at each time on some shortest path that respects its
/// constraints. Only whether a layer is a single cell is kept.
#[derive(Debug, Clone)]
pub(crate) struct Mdd {
    /// Shortest arrival time under the constraints.
    pub cost: u32,
    single: Vec<Option<Cell>>,
    goal: Cell,
    transient: bool,
}

impl Mdd {
    /// The only cell the agent can occupy at `t`, if there is exactly one.
    pub fn only_cell(&self, t: u32) -> Option<Cell> {
        if t > self.cost {
            return (!self.transient).then_some(self.goal);
        }
        self.single[t as usize]
    }
}

impl SingleAgent<'_> {
    /// Builds the decision diagram by a layered breadth-first search. Gives
    /// `None` if the goal cannot be reached.
    pub fn mdd(&self, cons: &AgentConstraints) -> Option<Mdd> {
        debug_assert_eq!(self.t0, 0);
        if self.heuristic[self.start] == u32::MAX || self.res.blocked(self.start, 0) {
            return None;
        }
        let goal_time = if self.transient {
            1
        } else {
            self.res.park_time(self.goal)?.max(cons.goal_time(self.goal)?)
        };
        let n = self.map.num_cells();
        let cap = cons.max_time.max(self.res.last_time()).max(goal_time) + n as u32;
        let mut layers: Vec<Vec<Cell>> = vec![vec![self.start]];
        let mut seen = vec![u32::MAX; n];
        loop {
            let t = layers.len() as u32 - 1;
            if t >= goal_time && layers[t as usize].contains(&self.goal) {
                break;
            }
            if t >= cap || layers[t as usize].is_empty() {
                return None;
            }
            let mut next = Vec::new();
            for &c in &layers[t as usize] {
                for to in std::iter::once(c).chain(self.map.neighbors(c)) {
                    if seen[to] != t + 1 && !cons.forbids(c, to, t) && self.res.move_allowed(c, to, t) {
                        seen[to] = t + 1;
                        next.push(to);
                    }
                }
            }
            layers.push(next);
        }
        let cost = layers.len() as u32 - 1;
        let mut single = vec![None; layers.len()];
        let mut keep = vec![false; n];
        let mut back = vec![self.goal];
        single[cost as usize] = Some(self.goal);
        for t in (0..cost).rev() {
            for &c in &back {
                keep[c] = true;
            }
            let prev: Vec<Cell> = layers[t as usize]
                .iter()
                .copied()
                .filter(|&c| {
                    std::iter::once(c)
                        .chain(self.map.neighbors(c))
                        .any(|to| keep[to] && !cons.forbids(c, to, t) && self.res.move_allowed(c, to, t))
                })
                .collect();
            for &c in &back {
                keep[c] = false;
            }
            if prev.len() == 1 {
                single[t as usize] = Some(prev[0]);
            }
            back = prev;
        }
        Some(Mdd { cost, single, goal: self.goal, transient: self.transient })
    }

    pub fn search(
        &self,
        cons: &AgentConstraints,
        cat: Option<&ConflictTable>,
        w: f64,
        deadline: Instant,
    ) -> Result<Option<SearchResult>, MapfError> {
        let t0 = self.t0;
        if self.heuristic[self.start] == u32::MAX || self.res.blocked(self.start, t0) {
            return Ok(None);
        }
        let goal_time = if self.transient {
            t0 + 1
        } else {
            let Some(park) = self.res.park_time(self.goal) else { return Ok(None) };
            let Some(earliest) = cons.goal_time(self.goal) else { return Ok(None) };
            park.max(earliest).max(t0)
        };
        let cat_last = cat.map_or(0, |c| c.last_time);
        let t_cap = cons.max_time.max(self.res.last_time()).max(cat_last).max(goal_time) + 1;
        let horizon = t0 + self.horizon + t_cap;
        let key = |cell: Cell, t: u32| vkey(cell, t.min(t_cap));
        let fval = |cell: Cell, t: u32| (t + self.heuristic[cell]).max(goal_time);

        let mut nodes: Vec<Node> = Vec::new();
        let mut best: HashMap<u64, u32> = HashMap::new();
        let mut open: BTreeSet<(u32, u32)> = BTreeSet::new();
        let mut focal: BinaryHeap<Reverse<(u32, u32, Reverse<u32>, u32)>> = BinaryHeap::new();
        let bound = |fmin: u32| ((fmin as f64) * w + 1e-9).floor() as u32;

        let root = Node {
            cell: self.start,
            g: t0,
            f: fval(self.start, t0),
            conflicts: 0,
            parent: NO_PARENT,
            closed: false,
            dead: false,
        };
        nodes.push(root);
        best.insert(key(self.start, t0), 0);
        open.insert((root.f, 0));
        focal.push(Reverse((0, root.f, Reverse(t0), 0)));
        let mut fmin = root.f;
        let mut expansions = 0u64;

        loop {
            let Some(Reverse((_, _, _, id))) = focal.pop() else {
                // Focal can only run dry while OPEN still has nodes outside the bound.
                let Some(&(f, _)) = open.first() else { return Ok(None) };
                let lo = bound(fmin);
                fmin = f;
                let hi = bound(fmin);
                for &(nf, nid) in open.range((lo + 1, 0)..) {
                    if nf > hi {
                        break;
                    }
                    let n = nodes[nid as usize];
                    focal.push(Reverse((n.conflicts, n.f, Reverse(n.g), nid)));
                }
                if focal.is_empty() {
                    // lo already covered f; push everything at fmin
                    for &(nf, nid) in open.range((fmin, 0)..) {
                        if nf > hi {
                            break;
                        }
                        let n = nodes[nid as usize];
                        focal.push(Reverse((n.conflicts, n.f, Reverse(n.g), nid)));
                    }
                }
                continue;
            };
            let node = nodes[id as usize];
            if node.dead || node.closed {
                continue;
            }
            open.remove(&(node.f, id));
            nodes[id as usize].closed = true;
            expansions += 1;
            if expansions % 1024 == 0 && Instant::now() > deadline {
                return Err(MapfError::Timeout);
            }

            if node.cell == self.goal && node.g >= goal_time {
                let mut path = Vec::new();
                let mut cur = id;
                while cur != NO_PARENT {
                    path.push(nodes[cur as usize].cell);
                    cur = nodes[cur as usize].parent;
                }
                path.reverse();
                return Ok(Some(SearchResult { path, expansions }));
            }

            if node.g < horizon {
                let t = node.g;
                let succs = std::iter::once(node.cell).chain(self.map.neighbors(node.cell));
                for next in succs {
                    if cons.forbids(node.cell, next, t) || !self.res.move_allowed(node.cell, next, t) {
                        continue;
                    }
                    let g = t + 1;
                    let conflicts = node.conflicts + cat.map_or(0, |c| c.count_move(node.cell, next, t));
                    let f = fval(next, g);
                    let k = key(next, g);
                    if let Some(&old_id) = best.get(&k) {
                        let old = nodes[old_id as usize];
                        let better = g < old.g || (g == old.g && conflicts < old.conflicts && !old.closed);
                        if !better {
                            continue;
                        }
                        if !old.closed {
                            nodes[old_id as usize].dead = true;
                            open.remove(&(old.f, old_id));
                        }
                    }
                    let nid = nodes.len() as u32;
                    nodes.push(Node { cell: next, g, f, conflicts, parent: id, closed: false, dead: false });
                    best.insert(k, nid);
                    open.insert((f, nid));
                    if f <= bound(fmin) {
                        focal.push(Reverse((conflicts, f, Reverse(g), nid)));
                    }
                }
            }

            // Keep FOCAL in sync when the minimum f of OPEN grows.
            if let Some(&(f, _)) = open.first() {
                if f > fmin {
                    let lo = bound(fmin);
                    fmin = f;
                    let hi = bound(fmin);
                    for &(nf, nid) in open.range((lo + 1, 0)..) {
                        if nf > hi {
                            break;
                        }
                        let n = nodes[nid as usize];
                        focal.push(Reverse((n.conflicts, n.f, Reverse(n.g), nid)));
                    }
                }
            } else {
                return Ok(None);
            }
        }
    }
}
