use std::collections::HashMap;

use crate::domain::Cell;

/// A trajectory entry: shelf `j` at step `k`.
pub type Entry = (usize, usize);

/// Precedence edges between trajectory entries.
///
/// For shelves `j != j'` and steps `k > k'` with `τ_j(k) = τ_j'(k')` there is
/// an edge from `(j, k)` to `(j', k' + 1)`: shelf `j` may enter step `k` only
/// once shelf `j'` has reached step `k' + 1`. Edges are never stored as
/// removed; an edge is released exactly when its target shelf's step counter
/// reaches the target step, so the live edges are a function of the steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    out: Vec<Vec<Vec<Entry>>>,
}

impl DependencyGraph {
    pub fn build(paths: &[Vec<Cell>]) -> Self {
        let mut visits: HashMap<Cell, Vec<Entry>> = HashMap::new();
        for (j, p) in paths.iter().enumerate() {
            for (k, &c) in p.iter().enumerate() {
                visits.entry(c).or_default().push((j, k));
            }
        }
        let mut out: Vec<Vec<Vec<Entry>>> = paths.iter().map(|p| vec![Vec::new(); p.len()]).collect();
        for list in visits.values() {
            for &(j, k) in list {
                for &(j2, k2) in list {
                    // k2 + 1 is missing only if the trajectories collide
                    if j != j2 && k > k2 && k2 + 1 < paths[j2].len() {
                        out[j][k].push((j2, k2 + 1));
                    }
                }
            }
        }
        for per_shelf in &mut out {
            for edges in per_shelf {
                edges.sort_unstable();
            }
        }
        DependencyGraph { out }
    }

    /// Drops every wait from collision-free timed `paths` and builds the
    /// graph over what is left. Each cell keeps its order of visits: a shelf
    /// may enter a cell once every earlier visitor has moved on from it.
    pub fn build_without_waits(paths: &[Vec<Cell>]) -> (Vec<Vec<Cell>>, Self) {
        // (first time, shelf, index) of every stay, per cell
        let mut stays: HashMap<Cell, Vec<(usize, usize, usize)>> = HashMap::new();
        let mut compact: Vec<Vec<Cell>> = Vec::with_capacity(paths.len());
        for (j, p) in paths.iter().enumerate() {
            let mut q: Vec<Cell> = Vec::new();
            for (t, &c) in p.iter().enumerate() {
                if q.last() != Some(&c) {
                    stays.entry(c).or_default().push((t, j, q.len()));
                    q.push(c);
                }
            }
            compact.push(q);
        }
        let mut out: Vec<Vec<Vec<Entry>>> = compact.iter().map(|p| vec![Vec::new(); p.len()]).collect();
        for list in stays.values_mut() {
            list.sort_unstable();
            for (a, &(_, j, k)) in list.iter().enumerate() {
                for &(_, j2, k2) in &list[..a] {
                    if j != j2 && k2 + 1 < compact[j2].len() {
                        out[j][k].push((j2, k2 + 1));
                    }
                }
            }
        }
        for per_shelf in &mut out {
            for edges in per_shelf {
                edges.sort_unstable();
                edges.dedup();
            }
        }
        (compact, DependencyGraph { out })
    }

    pub fn num_shelves(&self) -> usize {
        self.out.len()
    }

    /// All edges of entry `(j, k)`, released or not.
    pub fn out_edges(&self, j: usize, k: usize) -> &[Entry] {
        self.out[j].get(k).map_or(&[], Vec::as_slice)
    }

    /// Every edge, sorted.
    pub fn edges(&self) -> Vec<(Entry, Entry)> {
        let mut all = Vec::new();
        for (j, per_shelf) in self.out.iter().enumerate() {
            for (k, edges) in per_shelf.iter().enumerate() {
                all.extend(edges.iter().map(|&e| ((j, k), e)));
            }
        }
        all
    }

    pub fn num_edges(&self) -> usize {
        self.out.iter().flatten().map(Vec::len).sum()
    }

    /// Edges of `(j, k)` not yet released under the given step counters.
    pub fn live_out<'a>(&'a self, j: usize, k: usize, steps: &'a [usize]) -> impl Iterator<Item = Entry> + 'a {
        self.out_edges(j, k).iter().copied().filter(move |&(j2, m)| steps[j2] < m)
    }

    /// Number of unreleased dependencies of the next entry of shelf `j`
    /// (zero for a completed shelf).
    pub fn num_deps(&self, j: usize, steps: &[usize]) -> usize {
        self.live_out(j, steps[j] + 1, steps).count()
    }

    /// Whether the graph has no directed cycle.
    pub fn is_acyclic(&self) -> bool {
        // Kahn's algorithm over all entries.
        let index = |(j, k): Entry, offs: &[usize]| offs[j] + k;
        let mut offs = vec![0usize; self.out.len() + 1];
        for (j, per_shelf) in self.out.iter().enumerate() {
            offs[j + 1] = offs[j] + per_shelf.len();
        }
        let n = offs[self.out.len()];
        let mut indeg = vec![0usize; n];
        for (_, to) in self.edges() {
            indeg[index(to, &offs)] += 1;
        }
        let mut stack: Vec<Entry> = Vec::new();
        for (j, per_shelf) in self.out.iter().enumerate() {
            for k in 0..per_shelf.len() {
                if indeg[offs[j] + k] == 0 {
                    stack.push((j, k));
                }
            }
        }
        let mut seen = 0;
        while let Some((j, k)) = stack.pop() {
            seen += 1;
            for &to in &self.out[j][k] {
                let t = index(to, &offs);
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    stack.push(to);
                }
            }
        }
        seen == n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waits_are_dropped_but_order_kept() {
        // shelf 1 waits two steps for shelf 0 to clear cell 1
        let paths = vec![vec![1, 2, 2], vec![0, 0, 0, 1]];
        let (compact, g) = DependencyGraph::build_without_waits(&paths);
        assert_eq!(compact, vec![vec![1, 2], vec![0, 1]]);
        assert_eq!(g.edges(), vec![((1, 1), (0, 1))]);
        assert!(g.is_acyclic());
    }

    #[test]
    fn disjoint_trajectories_have_no_edges() {
        let g = DependencyGraph::build(&[vec![0, 1, 2], vec![5, 6, 7]]);
        assert_eq!(g.num_edges(), 0);
        assert!(g.is_acyclic());
    }

    #[test]
    fn follower_depends_on_leader_leaving() {
        // shelf 0 leaves cell 1 at step 1, shelf 1 enters it at step 1
        let g = DependencyGraph::build(&[vec![1, 2], vec![0, 1]]);
        assert_eq!(g.edges(), vec![((1, 1), (0, 1))]);
        assert_eq!(g.num_deps(1, &[0, 0]), 1);
        assert_eq!(g.num_deps(1, &[1, 0]), 0);
    }

    #[test]
    fn rotation_is_a_cycle_at_one_step() {
        // four shelves rotating around a 2x2 block, cells 0 1 3 2
        let g = DependencyGraph::build(&[vec![0, 1], vec![1, 3], vec![3, 2], vec![2, 0]]);
        assert_eq!(g.num_edges(), 4);
        assert!(!g.is_acyclic());
    }
}
