use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::time::Instant;

use crate::domain::{Cell, GridMap, UNREACHABLE};

use super::reservation::{vkey, Reservations};
use super::MapfError;

/// One goal of a multi-label search, visited in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Label {
    /// Reach the cell at any time.
    Visit(Cell),
    /// From `cells[0]`, walk the cells on consecutive timesteps without waiting.
    /// Entry `k` may not be reached before `not_before[k]`.
    Follow { cells: Vec<Cell>, not_before: Vec<u32> },
    /// Reach the cell and stay there forever.
    Park(Cell),
}

impl Label {
    fn entry(&self) -> Cell {
        match self {
            Label::Visit(c) | Label::Park(c) => *c,
            Label::Follow { cells, .. } => cells[0],
        }
    }

    fn exit(&self) -> Cell {
        match self {
            Label::Visit(c) | Label::Park(c) => *c,
            Label::Follow { cells, .. } => *cells.last().unwrap(),
        }
    }
}

/// Result of [`multi_label_astar`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelPath {
    /// Cells from time `t0` to the arrival at the final label.
    pub path: Vec<Cell>,
    /// For each label, the offset into `path` at which it was completed
    /// (for `Follow`, the offset at which the walk began).
    pub marks: Vec<usize>,
}

#[derive(Clone, Copy)]
struct Node {
    cell: Cell,
    t: u32,
    label: u16,
    seg: u32,
    parent: u32,
}

/// Time-minimal path from `start` at time `t0` through `labels`, avoiding `res`.
///
/// Returns `Ok(None)` when no such path exists within the search horizon.
pub fn multi_label_astar(
    map: &GridMap,
    start: Cell,
    t0: u32,
    labels: &[Label],
    res: &Reservations,
    deadline: Instant,
) -> Result<Option<LabelPath>, MapfError> {
    let Some(Label::Park(park)) = labels.last() else {
        return Err(MapfError::Invalid("the last label must be Park".into()));
    };
    for w in labels.windows(2) {
        if let (Label::Visit(v), Label::Follow { cells, .. }) = (&w[0], &w[1]) {
            if *v != cells[0] {
                return Err(MapfError::Invalid("Follow must start where the previous label ends".into()));
            }
        }
    }
    for l in labels {
        if let Label::Follow { cells, not_before } = l {
            if cells.is_empty() || cells.len() != not_before.len() {
                return Err(MapfError::Invalid("Follow needs one release time per cell".into()));
            }
        }
    }
    let Some(park_from) = res.park_time(*park) else { return Ok(None) };
    if res.blocked(start, t0) {
        return Ok(None);
    }

    let dist: Vec<Vec<u32>> = labels.iter().map(|l| map.distances_avoiding(l.entry(), res.forbidden_mask())).collect();
    // rest[i]: lower bound on the time from entering label i to the end
    let mut rest = vec![0u32; labels.len()];
    for i in (0..labels.len()).rev() {
        let own = match &labels[i] {
            Label::Follow { cells, .. } => cells.len() as u32 - 1,
            _ => 0,
        };
        let link = if i + 1 < labels.len() { dist[i + 1][labels[i].exit()] } else { 0 };
        if link == UNREACHABLE {
            return Ok(None);
        }
        rest[i] = own + link + if i + 1 < labels.len() { rest[i + 1] } else { 0 };
    }
    let max_release = labels
        .iter()
        .filter_map(|l| match l {
            Label::Follow { not_before, .. } => not_before.iter().copied().max(),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let t_cap = res.last_time().max(max_release).max(park_from).max(t0) + 1;
    let horizon = t_cap + (map.num_free() * (labels.len() + 2)) as u32;

    let h = |n: &Node| -> u32 {
        let l = n.label as usize;
        match &labels[l] {
            Label::Follow { .. } if n.seg > 0 => rest[l] - n.seg,
            _ => dist[l][n.cell].saturating_add(rest[l]),
        }
    };

    let mut nodes: Vec<Node> = Vec::new();
    let mut heap: BinaryHeap<Reverse<(u32, Reverse<u32>, u32)>> = BinaryHeap::new();
    let mut closed: HashSet<(u64, u16, u32)> = HashSet::new();
    let push = |nodes: &mut Vec<Node>, heap: &mut BinaryHeap<_>, n: Node| {
        let f = h(&n);
        if f == UNREACHABLE {
            return;
        }
        let id = nodes.len() as u32;
        nodes.push(n);
        heap.push(Reverse((n.t + f, Reverse(n.t), id)));
    };
    // A label already satisfied at the start is skipped by the expansion below.
    push(&mut nodes, &mut heap, Node { cell: start, t: t0, label: 0, seg: 0, parent: u32::MAX });
    let mut expansions = 0u64;

    while let Some(Reverse((_, _, id))) = heap.pop() {
        let mut n = nodes[id as usize];
        expansions += 1;
        if expansions % 1024 == 0 && Instant::now() > deadline {
            return Err(MapfError::Timeout);
        }
        // Zero-time label transitions.
        loop {
            let l = n.label as usize;
            match &labels[l] {
                Label::Visit(c) if n.cell == *c => n.label += 1,
                _ => break,
            }
        }
        let l = n.label as usize;
        if let Label::Park(c) = labels[l] {
            if n.cell == c && n.t >= park_from {
                return Ok(Some(rebuild(&nodes, id, n, labels)));
            }
        }
        if !closed.insert((vkey(n.cell, n.t.min(t_cap)), n.label, n.seg)) {
            continue;
        }
        if n.t >= horizon {
            continue;
        }
        let t = n.t;
        match &labels[l] {
            Label::Follow { cells, not_before } => {
                let k = n.seg as usize;
                if k == 0 && n.cell != cells[0] {
                    for next in std::iter::once(n.cell).chain(map.neighbors(n.cell)) {
                        if res.move_allowed(n.cell, next, t) {
                            push(&mut nodes, &mut heap, Node { cell: next, t: t + 1, parent: id, ..n });
                        }
                    }
                    continue;
                }
                if k == 0 && res.move_allowed(n.cell, n.cell, t) {
                    // wait at the start of the walk
                    push(&mut nodes, &mut heap, Node { t: t + 1, parent: id, ..n });
                }
                if k + 1 == cells.len() {
                    // walk done (also covers single-cell walks)
                    let done = Node { label: n.label + 1, seg: 0, ..n };
                    let f = h(&done);
                    if f < UNREACHABLE {
                        nodes.push(Node { parent: id, ..done });
                        let nid = nodes.len() as u32 - 1;
                        heap.push(Reverse((t + f, Reverse(t), nid)));
                    }
                    continue;
                }
                let next = cells[k + 1];
                if t + 1 >= not_before[k + 1] && res.move_allowed(n.cell, next, t) {
                    push(&mut nodes, &mut heap, Node { cell: next, t: t + 1, seg: n.seg + 1, parent: id, ..n });
                }
            }
            _ => {
                for next in std::iter::once(n.cell).chain(map.neighbors(n.cell)) {
                    if res.move_allowed(n.cell, next, t) {
                        push(&mut nodes, &mut heap, Node { cell: next, t: t + 1, parent: id, ..n });
                    }
                }
            }
        }
    }
    Ok(None)
}

fn rebuild(nodes: &[Node], id: u32, last: Node, labels: &[Label]) -> LabelPath {
    let mut chain = vec![last];
    let mut cur = nodes[id as usize].parent;
    while cur != u32::MAX {
        chain.push(nodes[cur as usize]);
        cur = nodes[cur as usize].parent;
    }
    chain.reverse();
    let t0 = chain[0].t;
    let mut path: Vec<Cell> = Vec::new();
    let mut marks = vec![usize::MAX; labels.len()];
    for n in &chain {
        let off = (n.t - t0) as usize;
        if path.len() == off {
            path.push(n.cell);
        }
        // Visit labels passed at this node.
        for (i, l) in labels.iter().enumerate() {
            if marks[i] == usize::MAX && (i as u16) < n.label {
                marks[i] = match l {
                    Label::Follow { cells, .. } => off + 1 - cells.len(),
                    _ => off,
                };
            }
            if let Label::Visit(c) = l {
                if marks[i] == usize::MAX && i as u16 == n.label && n.cell == *c {
                    marks[i] = off;
                }
            }
        }
    }
    let end = path.len() - 1;
    for m in &mut marks {
        if *m == usize::MAX {
            *m = end;
        }
    }
    LabelPath { path, marks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn far() -> Instant {
        Instant::now() + Duration::from_secs(10)
    }

    #[test]
    fn park_at_start_is_immediate() {
        let map = GridMap::open(3, 3);
        let res = Reservations::new(9, false);
        let out = multi_label_astar(&map, 4, 0, &[Label::Park(4)], &res, far()).unwrap().unwrap();
        assert_eq!(out.path, vec![4]);
    }

    #[test]
    fn walk_has_no_waits_and_respects_release() {
        let map = GridMap::open(1, 6);
        let res = Reservations::new(6, false);
        let labels = [
            Label::Visit(1),
            Label::Follow { cells: vec![1, 2, 3, 4], not_before: vec![0, 5, 0, 0] },
            Label::Park(0),
        ];
        let out = multi_label_astar(&map, 0, 0, &labels, &res, far()).unwrap().unwrap();
        let s = out.marks[1];
        assert_eq!(&out.path[s..s + 4], &[1, 2, 3, 4]);
        assert_eq!(s + 1, 5);
        assert_eq!(out.path.len() - 1, 5 + 2 + 4);
    }
}
