//! Push and Swap for sequential multi-agent motion.
//!
//! Exactly one agent moves per timestep, so every solution is 1-robust.
//! Finished agents displaced by a swap queue up behind the moving agent and
//! step back into their goals once it moves on.

use std::collections::VecDeque;
use std::time::Instant;

use crate::domain::{Cell, GridMap};

use super::{MapfError, MapfProblem, MapfSolution, SolverStats};

/// A single-agent move; the move's timestep is its index in the move list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Move {
    pub agent: usize,
    pub from: Cell,
    pub to: Cell,
}

/// Maximal run of consecutive moves by one agent: `moves[first..=last]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub agent: usize,
    pub first: usize,
    pub last: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequentialSolution {
    pub starts: Vec<Cell>,
    pub moves: Vec<Move>,
    pub segments: Vec<Segment>,
}

impl SequentialSolution {
    fn new(starts: Vec<Cell>, moves: Vec<Move>) -> Self {
        let mut segments: Vec<Segment> = Vec::new();
        for (k, m) in moves.iter().enumerate() {
            match segments.last_mut() {
                Some(s) if s.agent == m.agent => s.last = k,
                _ => segments.push(Segment { agent: m.agent, first: k, last: k }),
            }
        }
        SequentialSolution { starts, moves, segments }
    }

    /// Timed paths, one entry per timestep, padded to a common length.
    pub fn paths(&self) -> Vec<Vec<Cell>> {
        let mut paths: Vec<Vec<Cell>> = self.starts.iter().map(|&s| vec![s]).collect();
        for m in &self.moves {
            for (i, p) in paths.iter_mut().enumerate() {
                let last = *p.last().unwrap();
                p.push(if i == m.agent { m.to } else { last });
            }
        }
        paths
    }

    /// Cells visited by one agent, without waits.
    pub fn route(&self, agent: usize) -> Vec<Cell> {
        let mut r = vec![self.starts[agent]];
        r.extend(self.moves.iter().filter(|m| m.agent == agent).map(|m| m.to));
        r
    }

    /// Timed paths in which every move happens as early as possible while
    /// keeping the order of moves per agent and per cell. A cell is entered
    /// only a full timestep after it was left, so the paths are 1-robust.
    /// Each path ends at the agent's last move.
    pub fn parallel_paths(&self) -> Vec<Vec<Cell>> {
        let n = self.starts.len();
        let mut last_move: Vec<Option<usize>> = vec![None; n];
        let mut left_at: std::collections::HashMap<Cell, usize> = std::collections::HashMap::new();
        let mut timed: Vec<Vec<(usize, Cell)>> = vec![Vec::new(); n];
        for m in &self.moves {
            let after_agent = last_move[m.agent].map_or(0, |t| t + 1);
            let after_cell = left_at.get(&m.to).map_or(0, |&t| t + 1);
            let t = after_agent.max(after_cell);
            last_move[m.agent] = Some(t);
            left_at.insert(m.from, t);
            timed[m.agent].push((t, m.to));
        }
        (0..n)
            .map(|i| {
                let mut path = vec![self.starts[i]];
                for &(t, to) in &timed[i] {
                    let here = *path.last().unwrap();
                    path.resize(t + 1, here);
                    path.push(to);
                }
                path
            })
            .collect()
    }

    pub fn to_solution(&self, runtime: std::time::Duration) -> MapfSolution {
        let stats = SolverStats { runtime, ..Default::default() };
        let mut paths = self.paths();
        for p in &mut paths {
            let keep = crate::domain::completion_time(p) + 1;
            p.truncate(keep);
        }
        MapfSolution::new(paths, stats)
    }
}

struct Ps<'a> {
    map: &'a GridMap,
    pos: Vec<Cell>,
    occ: Vec<Option<usize>>,
    moves: Vec<Move>,
    deadline: Instant,
    move_cap: usize,
}

type Res<T> = Result<T, MapfError>;

impl Ps<'_> {
    fn step(&mut self, agent: usize, to: Cell) -> Res<()> {
        let from = self.pos[agent];
        debug_assert!(self.map.adjacent(from, to) && self.occ[to].is_none());
        self.occ[from] = None;
        self.occ[to] = Some(agent);
        self.pos[agent] = to;
        self.moves.push(Move { agent, from, to });
        if self.moves.len() > self.move_cap {
            return Err(MapfError::Unsolvable("move limit reached".into()));
        }
        if self.moves.len() % 4096 == 0 && Instant::now() > self.deadline {
            return Err(MapfError::Timeout);
        }
        Ok(())
    }

    /// Moves the occupant of `cell` (if any) out of it, shifting agents along
    /// a shortest path to the nearest empty cell that avoids `blocked`.
    fn clear(&mut self, cell: Cell, blocked: &[bool]) -> Res<bool> {
        if self.occ[cell].is_none() {
            return Ok(true);
        }
        let n = self.map.num_cells();
        let mut parent = vec![usize::MAX; n];
        let mut q = VecDeque::from([cell]);
        parent[cell] = cell;
        let mut target = None;
        while let Some(c) = q.pop_front() {
            if self.occ[c].is_none() {
                target = Some(c);
                break;
            }
            for nb in self.map.neighbors(c) {
                if parent[nb] == usize::MAX && !blocked[nb] {
                    parent[nb] = c;
                    q.push_back(nb);
                }
            }
        }
        let Some(mut c) = target else { return Ok(false) };
        while c != cell {
            let p = parent[c];
            let a = self.occ[p].expect("chain cells are occupied");
            self.step(a, c)?;
            c = p;
        }
        Ok(true)
    }

    fn shortest(&self, from: Cell, to: Cell, avoid: &[bool]) -> Option<Vec<Cell>> {
        self.map.shortest_path(from, to, avoid)
    }

    /// Exchanges the positions of adjacent agents `a` and `b`; everyone else
    /// ends where they were.
    fn swap(&mut self, a: usize, b: usize, forbidden: &[bool]) -> Res<bool> {
        let mark = self.moves.len();
        let (pa, pb) = (self.pos[a], self.pos[b]);
        // candidate branching cells, nearest first
        let dist = self.map.distances_avoiding(pa, forbidden);
        let mut hubs: Vec<Cell> = self
            .map
            .free_cells()
            .filter(|&c| !forbidden[c] && dist[c] != u32::MAX)
            .filter(|&c| self.map.neighbors(c).filter(|&x| !forbidden[x]).count() >= 3)
            .collect();
        hubs.sort_by_key(|&c| (dist[c], c));
        for &hub in &hubs {
            if self.try_swap_at(a, b, hub, forbidden)? {
                let done = self.moves.len();
                // undo everything except the exchange itself, labels exchanged
                let tail: Vec<Move> = self.moves[mark..done - 6].to_vec();
                for m in tail.iter().rev() {
                    let who = if m.agent == a {
                        b
                    } else if m.agent == b {
                        a
                    } else {
                        m.agent
                    };
                    self.step(who, m.from)?;
                }
                debug_assert_eq!((self.pos[a], self.pos[b]), (pb, pa));
                return Ok(true);
            }
            self.rollback(mark);
        }
        Ok(false)
    }

    fn rollback(&mut self, mark: usize) {
        while self.moves.len() > mark {
            let m = self.moves.pop().unwrap();
            self.occ[m.to] = None;
            self.occ[m.from] = Some(m.agent);
            self.pos[m.agent] = m.from;
        }
    }

    fn try_swap_at(&mut self, a: usize, b: usize, hub: Cell, forbidden: &[bool]) -> Res<bool> {
        let mut avoid = forbidden.to_vec();
        // pick the leader: the agent whose route to the hub avoids the other
        avoid[self.pos[b]] = true;
        let ra = self.shortest(self.pos[a], hub, &avoid);
        avoid[self.pos[b]] = forbidden[self.pos[b]];
        avoid[self.pos[a]] = true;
        let rb = self.shortest(self.pos[b], hub, &avoid);
        let (lead, follow, route) = match (ra, rb) {
            (Some(x), Some(y)) if y.len() < x.len() => (b, a, y),
            (Some(x), _) => (a, b, x),
            (None, Some(y)) => (b, a, y),
            (None, None) => return Ok(false),
        };
        for &next in &route[1..] {
            let mut blk = forbidden.to_vec();
            blk[self.pos[lead]] = true;
            blk[self.pos[follow]] = true;
            if !self.clear(next, &blk)? {
                return Ok(false);
            }
            let from = self.pos[lead];
            self.step(lead, next)?;
            self.step(follow, from)?;
        }
        let back = self.pos[follow];
        let mut blk = forbidden.to_vec();
        blk[hub] = true;
        blk[back] = true;
        let mut freed = Vec::new();
        for nb in self.map.neighbors(hub).collect::<Vec<_>>() {
            if nb == back || forbidden[nb] {
                continue;
            }
            if self.clear(nb, &blk)? {
                freed.push(nb);
                blk[nb] = true;
                if freed.len() == 2 {
                    break;
                }
            }
        }
        if freed.len() < 2 {
            return Ok(false);
        }
        let (n1, n2) = (freed[0], freed[1]);
        self.step(lead, n1)?;
        self.step(follow, hub)?;
        self.step(follow, n2)?;
        self.step(lead, hub)?;
        self.step(lead, back)?;
        self.step(follow, hub)?;
        Ok(true)
    }
}

/// Solves the problem with Push and Swap.
///
/// Needs at least two cells not occupied by starts. Agents whose start is
/// not their goal are routed first; agents pushed off their goal are routed
/// afterwards. Frozen paths and constraints are not supported.
pub fn solve_push_and_swap(problem: &MapfProblem) -> Result<SequentialSolution, MapfError> {
    problem.check()?;
    if !problem.frozen.is_empty() || !problem.constraints.is_empty() {
        return Err(MapfError::Invalid("push and swap takes neither frozen paths nor constraints".into()));
    }
    let map = problem.map;
    let n = problem.num_agents();
    let mut forbidden = vec![false; map.num_cells()];
    for &c in &problem.forbidden {
        forbidden[c] = true;
    }
    let usable = map.free_cells().filter(|&c| !forbidden[c]).count();
    if usable < n + 2 {
        return Err(MapfError::Unsolvable("fewer than two empty cells".into()));
    }
    let mut occ = vec![None; map.num_cells()];
    for (i, &s) in problem.starts.iter().enumerate() {
        occ[s] = Some(i);
    }
    let mut ps = Ps {
        map,
        pos: problem.starts.clone(),
        occ,
        moves: Vec::new(),
        deadline: Instant::now() + problem.time_budget,
        move_cap: 64 * usable * (n + 1) * (n + 1),
    };
    let goals = &problem.goals;
    let mut order: Vec<usize> = (0..n).filter(|&i| problem.starts[i] != goals[i]).collect();
    order.extend((0..n).filter(|&i| problem.starts[i] == goals[i]));

    let mut done = vec![false; n];
    let mut done_cells = forbidden.clone();
    for &r in &order {
        if ps.pos[r] == goals[r] {
            done[r] = true;
            done_cells[goals[r]] = true;
            continue;
        }
        let route = ps
            .shortest(ps.pos[r], goals[r], &done_cells)
            .or_else(|| ps.shortest(ps.pos[r], goals[r], &forbidden))
            .ok_or_else(|| MapfError::Unsolvable(format!("agent {r} cannot reach its goal")))?;
        let mut trail: Vec<usize> = Vec::new();
        for &next in &route[1..] {
            let mut blk = done_cells.clone();
            blk[ps.pos[r]] = true;
            for &t in &trail {
                blk[ps.pos[t]] = true;
            }
            let finished_there = ps.occ[next].is_some_and(|s| done[s]);
            if finished_there || !ps.clear(next, &blk)? {
                let s = ps.occ[next].unwrap();
                if !ps.swap(r, s, &forbidden)? {
                    return Err(MapfError::Unsolvable(format!("agents {r} and {s} cannot swap")));
                }
                if done[s] {
                    done_cells[goals[s]] = false;
                    trail.push(s);
                }
            } else {
                ps.step(r, next)?;
            }
            settle(&mut ps, &mut trail, goals, r, &mut done_cells, &forbidden, false)?;
        }
        settle(&mut ps, &mut trail, goals, r, &mut done_cells, &forbidden, true)?;
        for i in 0..n {
            if done[i] && ps.pos[i] == goals[i] {
                done_cells[goals[i]] = true;
            }
        }
        done[r] = true;
        done_cells[goals[r]] = true;
    }
    if (0..n).any(|i| ps.pos[i] != goals[i]) {
        return Err(MapfError::Unsolvable("agents left off their goals".into()));
    }
    Ok(SequentialSolution::new(problem.starts.clone(), ps.moves))
}

/// Moves trail agents back into their goals, nearest to the mover first.
fn settle(
    ps: &mut Ps,
    trail: &mut Vec<usize>,
    goals: &[Cell],
    mover: usize,
    done_cells: &mut [bool],
    forbidden: &[bool],
    finish: bool,
) -> Res<()> {
    loop {
        let mut progressed = false;
        let mut k = trail.len();
        while k > 0 {
            k -= 1;
            let a = trail[k];
            let g = goals[a];
            match ps.occ[g] {
                Some(b) if b == a => {}
                None => {
                    if ps.map.adjacent(ps.pos[a], g) {
                        ps.step(a, g)?;
                    } else {
                        let mut avoid = forbidden.to_vec();
                        avoid[ps.pos[mover]] = true;
                        let Some(path) = ps.shortest(ps.pos[a], g, &avoid) else { continue };
                        for &c in &path[1..] {
                            if ps.occ[c].is_some() {
                                break;
                            }
                            ps.step(a, c)?;
                        }
                        if ps.pos[a] != g {
                            continue;
                        }
                    }
                }
                Some(b) if b == mover || trail.contains(&b) => continue,
                Some(b) => {
                    let mut blk = done_cells.to_vec();
                    blk[ps.pos[mover]] = true;
                    for &t in trail.iter() {
                        blk[ps.pos[t]] = true;
                    }
                    if !ps.clear(g, &blk)? {
                        if !ps.map.adjacent(ps.pos[a], g) || !ps.swap(a, b, forbidden)? {
                            continue;
                        }
                    } else if ps.map.adjacent(ps.pos[a], g) {
                        ps.step(a, g)?;
                    } else {
                        continue;
                    }
                }
            }
            done_cells[g] = true;
            trail.remove(k);
            progressed = true;
        }
        if trail.is_empty() || !finish {
            return Ok(());
        }
        if !progressed {
            return Err(MapfError::Unsolvable("displaced agents cannot return".into()));
        }
    }
}
