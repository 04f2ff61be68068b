//! Vertex and edge collisions between timed paths.
//!
//! A path is a sequence of cells indexed by timestep from 0. A path that ends
//! early is treated as waiting at its last cell forever.

use super::grid::Cell;

/// One collision between two timed paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Conflict {
    /// Both units occupy `cell` at `time`.
    Vertex { time: usize, cell: Cell },
    /// The units exchange `a` and `b` between `time` and `time + 1`
    /// (the first path moves `a -> b`).
    Edge { time: usize, a: Cell, b: Cell },
}

impl Conflict {
    pub fn time(&self) -> usize {
        match *self {
            Conflict::Vertex { time, .. } | Conflict::Edge { time, .. } => time,
        }
    }
}

/// Position on a padded path.
#[inline]
pub fn at(path: &[Cell], t: usize) -> Cell {
    path[t.min(path.len() - 1)]
}

/// All vertex and edge conflicts between two paths, ordered by time.
///
/// Both paths must be non-empty.
pub fn collision_check(a: &[Cell], b: &[Cell]) -> Vec<Conflict> {
    let horizon = a.len().max(b.len());
    let mut out = Vec::new();
    for t in 0..horizon {
        let (pa, pb) = (at(a, t), at(b, t));
        if pa == pb {
            out.push(Conflict::Vertex { time: t, cell: pa });
        }
        if t + 1 < horizon {
            let (na, nb) = (at(a, t + 1), at(b, t + 1));
            if pa != na && pa == nb && na == pb {
                out.push(Conflict::Edge { time: t, a: pa, b: na });
            }
        }
    }
    out
}

/// Conflicts among a set of paths, as `(i, j, conflict)` with `i < j`,
/// sorted by time, then ids.
pub fn pairwise_conflicts(paths: &[Vec<Cell>]) -> Vec<(usize, usize, Conflict)> {
    let mut out = Vec::new();
    for i in 0..paths.len() {
        for j in i + 1..paths.len() {
            out.extend(collision_check(&paths[i], &paths[j]).into_iter().map(|c| (i, j, c)));
        }
    }
    out.sort_by_key(|&(i, j, c)| (c.time(), i, j, c));
    out
}

/// First violation of 1-robustness: some unit enters at `t + 1` a cell another
/// unit occupied at `t`. Returns `(mover, occupant, t)`.
pub fn first_robustness_violation(paths: &[Vec<Cell>]) -> Option<(usize, usize, usize)> {
    let horizon = paths.iter().map(Vec::len).max().unwrap_or(0);
    let mut occupant = std::collections::HashMap::with_capacity(paths.len());
    for t in 0..horizon.saturating_sub(1) {
        occupant.clear();
        for (j, pj) in paths.iter().enumerate() {
            occupant.entry(at(pj, t)).or_insert(j);
        }
        for (i, pi) in paths.iter().enumerate() {
            let next = at(pi, t + 1);
            if let Some(&j) = occupant.get(&next) {
                if j != i {
                    return Some((i, j, t));
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swap_is_one_edge_conflict() {
        assert_eq!(collision_check(&[1, 2], &[2, 1]), vec![Conflict::Edge { time: 0, a: 1, b: 2 }]);
    }

    #[test]
    fn parallel_waits_do_not_conflict() {
        assert!(collision_check(&[1, 1], &[2, 2]).is_empty());
    }

    #[test]
    fn padding_extends_short_paths() {
        // b arrives at 5 at t=2 and stays; a passes 5 at t=3.
        let a = [1, 2, 3, 5, 6];
        let b = [7, 6, 5];
        assert_eq!(collision_check(&a, &b), vec![Conflict::Vertex { time: 3, cell: 5 }]);
    }

    #[test]
    fn following_is_not_a_collision_but_not_robust() {
        let paths = vec![vec![1, 2, 3], vec![0, 1, 2]];
        assert!(pairwise_conflicts(&paths).is_empty());
        assert_eq!(first_robustness_violation(&paths), Some((1, 0, 0)));
    }
}
