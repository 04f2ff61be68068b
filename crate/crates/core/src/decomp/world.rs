use crate::domain::{at, Cell};

use super::depgraph::DependencyGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentType {
    Free,
    Active,
}

/// State of one agent: its type and the shelf assigned to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AgentState {
    pub kind: AgentType,
    pub shelf: Option<usize>,
}

impl AgentState {
    pub const IDLE: AgentState = AgentState { kind: AgentType::Free, shelf: None };

    pub fn is_active(&self) -> bool {
        self.kind == AgentType::Active
    }

    pub fn is_idle(&self) -> bool {
        self.kind == AgentType::Free && self.shelf.is_none()
    }
}

/// Shelf step counters and agent states over fixed trajectories.
///
/// Agent locations are kept by the caller: [`World::update`] only needs to
/// know which free agents stand on their assigned shelf.
#[derive(Debug, Clone)]
pub struct World<'a> {
    pub trajectories: &'a [Vec<Cell>],
    pub graph: &'a DependencyGraph,
    pub steps: Vec<usize>,
    pub states: Vec<AgentState>,
}

impl<'a> World<'a> {
    pub fn new(trajectories: &'a [Vec<Cell>], graph: &'a DependencyGraph, agents: usize) -> Self {
        World { trajectories, graph, steps: vec![0; trajectories.len()], states: vec![AgentState::IDLE; agents] }
    }

    pub fn shelf_cell(&self, j: usize) -> Cell {
        at(&self.trajectories[j], self.steps[j])
    }

    pub fn is_complete(&self, j: usize) -> bool {
        self.steps[j] + 1 >= self.trajectories[j].len()
    }

    pub fn all_complete(&self) -> bool {
        (0..self.trajectories.len()).all(|j| self.is_complete(j))
    }

    /// Unreleased dependencies of shelf `j`'s next entry.
    pub fn num_deps(&self, j: usize) -> usize {
        self.graph.num_deps(j, &self.steps)
    }

    /// Whether the single dependency of shelf `j`'s next entry can be
    /// released in the same step: its target shelf is one step short of it.
    pub fn soft_dep(&self, j: usize) -> bool {
        self.soft_target(j).is_some()
    }

    /// Shelf whose simultaneous advance would release `j`, if `j` is softly constrained.
    pub fn soft_target(&self, j: usize) -> Option<usize> {
        let mut live = self.graph.live_out(j, self.steps[j] + 1, &self.steps);
        let (j2, m) = live.next()?;
        if live.next().is_some() {
            return None;
        }
        (self.steps[j2] + 1 == m).then_some(j2)
    }

    /// Active agent carrying shelf `j`, if any.
    pub fn carrier(&self, j: usize) -> Option<usize> {
        self.states.iter().position(|s| s.is_active() && s.shelf == Some(j))
    }

    /// Shelves carried by active agents or assigned to free agents.
    pub fn assigned_shelves(&self) -> Vec<bool> {
        let mut out = vec![false; self.trajectories.len()];
        for s in &self.states {
            if let Some(j) = s.shelf {
                out[j] = true;
            }
        }
        out
    }

    /// Unassigned, incomplete shelves whose next entry has no dependency.
    pub fn executable_unassigned(&self) -> Vec<usize> {
        let assigned = self.assigned_shelves();
        (0..self.trajectories.len())
            .filter(|&j| !assigned[j] && !self.is_complete(j) && self.num_deps(j) == 0)
            .collect()
    }

    /// One call of the state update. `at_shelf[i]` tells whether free agent
    /// `i` stands on its assigned shelf. Returns the agents whose state changed.
    pub fn update(&mut self, at_shelf: &[bool]) -> Vec<usize> {
        let before = self.states.clone();
        let mut soft = Vec::new();
        for i in 0..self.states.len() {
            let Some(j) = self.states[i].shelf else { continue };
            let deps = self.num_deps(j);
            let is_soft = deps == 1 && self.soft_dep(j);
            match self.states[i].kind {
                AgentType::Free if at_shelf[i] => {
                    if is_soft {
                        soft.push(i);
                    } else if deps >= 1 {
                        self.states[i].shelf = None;
                    } else {
                        self.states[i].kind = AgentType::Active;
                    }
                }
                AgentType::Active => {
                    if self.is_complete(j) {
                        self.states[i] = AgentState::IDLE;
                    } else if is_soft {
                        soft.push(i);
                    } else if deps >= 1 {
                        self.states[i] = AgentState::IDLE;
                    }
                }
                AgentType::Free => {}
            }
        }
        let stuck = find_no_move(self, &soft);
        for (i, stays) in soft.into_iter().zip(stuck) {
            if stays {
                self.states[i] = AgentState::IDLE;
            } else {
                self.states[i].kind = AgentType::Active;
            }
        }
        (0..self.states.len()).filter(|&i| self.states[i] != before[i]).collect()
    }

    /// Advances every active agent's shelf one step along its trajectory.
    pub fn step(&mut self) {
        for s in &self.states {
            if let (AgentType::Active, Some(j)) = (s.kind, s.shelf) {
                debug_assert!(!self.is_complete(j), "active agent on a completed shelf");
                self.steps[j] += 1;
            }
        }
    }
}

/// For the softly constrained agents `soft`, tells which of them cannot move
/// this step (`true`) and which move together with their dependency.
///
/// The next entries of their shelves form chains and cycles under the
/// single-dependency relation. Cycles move. A chain moves iff its last
/// dependency points at a shelf carried by an active agent outside `soft`.
pub fn find_no_move(world: &World, soft: &[usize]) -> Vec<bool> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        OnStack,
        Moves,
        Stuck,
    }
    let shelf_of = |i: usize| world.states[i].shelf.expect("softly constrained agent without shelf");
    let mut index_of_shelf = std::collections::HashMap::new();
    for (idx, &i) in soft.iter().enumerate() {
        index_of_shelf.insert(shelf_of(i), idx);
    }
    let mut mark = vec![Mark::Open; soft.len()];
    for start in 0..soft.len() {
        if mark[start] != Mark::Open {
            continue;
        }
        let mut chain = Vec::new();
        let mut cur = start;
        let verdict = loop {
            match mark[cur] {
                Mark::Moves => break Mark::Moves,
                Mark::Stuck => break Mark::Stuck,
                Mark::OnStack => break Mark::Moves,
                Mark::Open => {}
            }
            mark[cur] = Mark::OnStack;
            chain.push(cur);
            let target = world.soft_target(shelf_of(soft[cur])).expect("dependency is not soft");
            match index_of_shelf.get(&target) {
                Some(&next) => cur = next,
                None => {
                    let released = world.carrier(target).is_some();
                    break if released { Mark::Moves } else { Mark::Stuck };
                }
            }
        };
        for idx in chain {
            mark[idx] = verdict;
        }
    }
    mark.into_iter().map(|m| m == Mark::Stuck).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idle_world<'a>(paths: &'a [Vec<Cell>], g: &'a DependencyGraph, agents: usize) -> World<'a> {
        World::new(paths, g, agents)
    }

    #[test]
    fn free_agent_on_unconstrained_shelf_becomes_active() {
        let paths = vec![vec![0, 1]];
        let g = DependencyGraph::build(&paths);
        let mut w = idle_world(&paths, &g, 1);
        w.states[0].shelf = Some(0);
        assert_eq!(w.update(&[true]), vec![0]);
        assert!(w.states[0].is_active());
        w.step();
        assert_eq!(w.shelf_cell(0), 1);
        assert_eq!(w.update(&[false]), vec![0]);
        assert_eq!(w.states[0], AgentState::IDLE);
    }

    #[test]
    fn hard_dependency_unassigns() {
        // shelf 1 enters cell 1 at step 2, which shelf 0 leaves only at step 2
        let paths = vec![vec![2, 1, 2], vec![3, 0, 1]];
        let g = DependencyGraph::build(&paths);
        let mut w = idle_world(&paths, &g, 1);
        w.steps[1] = 1;
        w.states[0].shelf = Some(1);
        assert_eq!(w.num_deps(1), 1);
        assert!(!w.soft_dep(1));
        w.update(&[true]);
        assert_eq!(w.states[0], AgentState::IDLE);
    }

    #[test]
    fn chain_to_uncarried_shelf_does_not_move() {
        let paths = vec![vec![1, 2], vec![0, 1]];
        let g = DependencyGraph::build(&paths);
        let mut w = idle_world(&paths, &g, 2);
        w.states[0].shelf = Some(1);
        w.update(&[true, false]);
        assert_eq!(w.states[0], AgentState::IDLE);
        // with the leader carried, both move together
        w.states[0].shelf = Some(1);
        w.states[1] = AgentState { kind: AgentType::Active, shelf: Some(0) };
        w.update(&[true, false]);
        assert!(w.states[0].is_active() && w.states[1].is_active());
    }

    #[test]
    fn soft_cycle_moves_together() {
        let paths = vec![vec![0, 1], vec![1, 3], vec![3, 2], vec![2, 0]];
        let g = DependencyGraph::build(&paths);
        let mut w = idle_world(&paths, &g, 4);
        for i in 0..4 {
            w.states[i].shelf = Some(i);
            assert!(w.soft_dep(i));
        }
        let changed = w.update(&[true; 4]);
        assert_eq!(changed, vec![0, 1, 2, 3]);
        assert!(w.states.iter().all(AgentState::is_active));
        // one agent missing: the chain ends at an uncarried shelf
        let mut w = idle_world(&paths, &g, 3);
        for i in 0..3 {
            w.states[i].shelf = Some(i);
        }
        w.update(&[true; 3]);
        assert!(w.states.iter().all(|s| *s == AgentState::IDLE));
    }
}
