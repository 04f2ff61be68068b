use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::FormatError;

/// Row-major cell index into a [`GridMap`].
///
/// The numeric order of indices equals lexicographic `(row, col)` order, which
/// is the tie-breaking order used by every search in the crate.
pub type Cell = usize;

/// Distance value used for unreachable cells.
pub const UNREACHABLE: u32 = u32::MAX;

/// `(row, col)` pair as it appears in the file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coord(pub usize, pub usize);

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

/// A 4-connected grid. Blocked cells are not part of the movement graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    blocked: Vec<bool>,
}

impl GridMap {
    /// Map without obstacles.
    pub fn open(height: usize, width: usize) -> Self {
        GridMap { width, height, blocked: vec![false; width * height] }
    }

    pub fn from_blocked(height: usize, width: usize, blocked: Vec<bool>) -> Result<Self, FormatError> {
        if blocked.len() != width * height {
            return Err(FormatError::Map(format!(
                "expected {} cells, got {}",
                width * height,
                blocked.len()
            )));
        }
        Ok(GridMap { width, height, blocked })
    }

    /// Parses ASCII rows where `@`, `T` and `O` are obstacles and anything else is free.
    pub fn from_rows(rows: &[&str]) -> Result<Self, FormatError> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut blocked = Vec::with_capacity(width * height);
        for (r, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(FormatError::Map(format!("row {r} has wrong width")));
            }
            blocked.extend(row.chars().map(|ch| matches!(ch, '@' | 'T' | 'O')));
        }
        Ok(GridMap { width, height, blocked })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn num_free(&self) -> usize {
        self.blocked.iter().filter(|b| !**b).count()
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        debug_assert!(row < self.height && col < self.width);
        row * self.width + col
    }

    pub fn coord(&self, cell: Cell) -> Coord {
        Coord(cell / self.width, cell % self.width)
    }

    pub fn cell_of(&self, coord: Coord) -> Option<Cell> {
        (coord.0 < self.height && coord.1 < self.width).then(|| self.cell(coord.0, coord.1))
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell < self.num_cells()
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        cell < self.blocked.len() && !self.blocked[cell]
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.num_cells()).filter(|&c| !self.blocked[c])
    }

    /// Free 4-neighbours in order up, left, right, down (ascending index).
    pub fn neighbors(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        let (r, c) = (cell / self.width, cell % self.width);
        let up = (r > 0).then(|| cell - self.width);
        let left = (c > 0).then(|| cell - 1);
        let right = (c + 1 < self.width).then(|| cell + 1);
        let down = (r + 1 < self.height).then(|| cell + self.width);
        [up, left, right, down].into_iter().flatten().filter(move |&n| !self.blocked[n])
    }

    pub fn degree(&self, cell: Cell) -> usize {
        self.neighbors(cell).count()
    }

    pub fn adjacent(&self, a: Cell, b: Cell) -> bool {
        if a == b {
            return false;
        }
        let (ra, ca) = (a / self.width, a % self.width);
        let (rb, cb) = (b / self.width, b % self.width);
        ra.abs_diff(rb) + ca.abs_diff(cb) == 1
    }

    /// True when `b` is reachable from `a` in one timestep (wait or single move).
    pub fn step_ok(&self, a: Cell, b: Cell) -> bool {
        a == b || self.adjacent(a, b)
    }

    /// Breadth-first distances from `source` over free cells not in `avoid`.
    pub fn distances_avoiding(&self, source: Cell, avoid: &[bool]) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.num_cells()];
        if !self.is_free(source) {
            return dist;
        }
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(c) = queue.pop_front() {
            let d = dist[c] + 1;
            for n in self.neighbors(c) {
                if dist[n] == UNREACHABLE && !avoid.get(n).copied().unwrap_or(false) {
                    dist[n] = d;
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    pub fn distances_from(&self, source: Cell) -> Vec<u32> {
        self.distances_avoiding(source, &[])
    }

    /// Shortest path (inclusive of both ends) with ties broken towards lower indices.
    pub fn shortest_path(&self, from: Cell, to: Cell, avoid: &[bool]) -> Option<Vec<Cell>> {
        let dist = self.distances_avoiding(to, avoid);
        if dist[from] == UNREACHABLE {
            return None;
        }
        let mut path = vec![from];
        let mut cur = from;
        while cur != to {
            cur = self.neighbors(cur).find(|&n| dist[n] != UNREACHABLE && dist[n] + 1 == dist[cur])?;
            path.push(cur);
        }
        Some(path)
    }

    /// Whether the free cells not in `removed` form one connected component.
    pub fn is_connected_without(&self, removed: &[bool]) -> bool {
        let is_kept = |c: Cell| self.is_free(c) && !removed.get(c).copied().unwrap_or(false);
        let Some(first) = (0..self.num_cells()).find(|&c| is_kept(c)) else {
            return true;
        };
        let dist = self.distances_avoiding(first, removed);
        (0..self.num_cells()).all(|c| !is_kept(c) || dist[c] != UNREACHABLE)
    }

    pub fn is_connected(&self) -> bool {
        self.is_connected_without(&[])
    }

    pub fn on_perimeter(&self, cell: Cell) -> bool {
        let Coord(r, c) = self.coord(cell);
        r == 0 || c == 0 || r + 1 == self.height || c + 1 == self.width
    }

    /// Renders the map in the MovingAI text format.
    pub fn to_movingai(&self) -> String {
        let mut out = format!("type octile\nheight {}\nwidth {}\nmap\n", self.height, self.width);
        for r in 0..self.height {
            for c in 0..self.width {
                out.push(if self.blocked[r * self.width + c] { '@' } else { '.' });
            }
            out.push('\n');
        }
        out
    }
}

impl FromStr for GridMap {
    type Err = FormatError;

    /// Parses the MovingAI `.map` format.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut lines = s.lines();
        let mut height = None;
        let mut width = None;
        for line in lines.by_ref() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next()) {
                (Some("type"), _) => {}
                (Some("height"), Some(v)) => {
                    height = Some(v.parse().map_err(|_| FormatError::Map(format!("bad height {v:?}")))?)
                }
                (Some("width"), Some(v)) => {
                    width = Some(v.parse().map_err(|_| FormatError::Map(format!("bad width {v:?}")))?)
                }
                (Some("map"), None) => break,
                _ => return Err(FormatError::Map(format!("unexpected header line {line:?}"))),
            }
        }
        let height: usize = height.ok_or_else(|| FormatError::Map("missing height".into()))?;
        let width: usize = width.ok_or_else(|| FormatError::Map("missing width".into()))?;
        let rows: Vec<&str> = lines.map(str::trim_end).filter(|l| !l.is_empty()).collect();
        if rows.len() != height {
            return Err(FormatError::Map(format!("expected {height} rows, found {}", rows.len())));
        }
        let map = GridMap::from_rows(&rows)?;
        if map.width != width {
            return Err(FormatError::Map(format!("expected width {width}, found {}", map.width)));
        }
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_movingai_header() {
        let text = "type octile\nheight 2\nwidth 3\nmap\n.@.\n...\n";
        let map: GridMap = text.parse().unwrap();
        assert_eq!((map.height(), map.width()), (2, 3));
        assert!(!map.is_free(1));
        assert_eq!(map.num_free(), 5);
        assert_eq!(map.to_movingai(), text);
    }

    #[test]
    fn rejects_row_count_mismatch() {
        let text = "type octile\nheight 3\nwidth 2\nmap\n..\n..\n";
        assert!(text.parse::<GridMap>().is_err());
    }

    #[test]
    fn neighbors_skip_obstacles_and_edges() {
        let map = GridMap::from_rows(&["...", ".@.", "..."]).unwrap();
        let n: Vec<_> = map.neighbors(map.cell(0, 1)).collect();
        assert_eq!(n, vec![map.cell(0, 0), map.cell(0, 2)]);
        assert_eq!(map.degree(map.cell(0, 0)), 2);
    }

    #[test]
    fn connectivity_with_removed_cells() {
        let map = GridMap::open(1, 5);
        assert!(map.is_connected());
        let mut removed = vec![false; 5];
        removed[2] = true;
        assert!(!map.is_connected_without(&removed));
        removed[2] = false;
        removed[0] = true;
        assert!(map.is_connected_without(&removed));
    }

    #[test]
    fn shortest_path_prefers_low_indices() {
        let map = GridMap::open(3, 3);
        let p = map.shortest_path(map.cell(0, 0), map.cell(2, 2), &[]).unwrap();
        assert_eq!(p.len(), 5);
        assert_eq!(p[1], map.cell(0, 1));
    }
}
