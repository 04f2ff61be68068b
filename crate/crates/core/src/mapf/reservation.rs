use std::collections::{HashMap, HashSet};

use crate::domain::Cell;

#[inline]
pub(crate) fn vkey(cell: Cell, t: u32) -> u64 {
    ((cell as u64) << 32) | t as u64
}

#[inline]
pub(crate) fn ekey(from: Cell, to: Cell, t: u32) -> (u64, u32) {
    (((from as u64) << 32) | to as u64, t)
}

/// Space-time obstacles: timed paths that must be avoided plus static cells.
///
/// A path occupies its last cell forever after it ends.
#[derive(Debug, Clone)]
pub struct Reservations {
    occupied: HashSet<u64>,
    moves: HashSet<(u64, u32)>,
    parked_from: HashMap<Cell, u32>,
    last_visit: HashMap<Cell, u32>,
    forbidden: Vec<bool>,
    robust: bool,
    last_time: u32,
}

impl Reservations {
    pub fn new(num_cells: usize, robust: bool) -> Self {
        Reservations {
            occupied: HashSet::new(),
            moves: HashSet::new(),
            parked_from: HashMap::new(),
            last_visit: HashMap::new(),
            forbidden: vec![false; num_cells],
            robust,
            last_time: 0,
        }
    }

    pub fn forbid(&mut self, cell: Cell) {
        self.forbidden[cell] = true;
    }

    pub fn is_forbidden(&self, cell: Cell) -> bool {
        self.forbidden[cell]
    }

    pub fn forbidden_mask(&self) -> &[bool] {
        &self.forbidden
    }

    pub fn robust(&self) -> bool {
        self.robust
    }

    /// Reserves a path starting at time 0.
    pub fn add_path(&mut self, path: &[Cell]) {
        self.add_path_from(path, 0);
    }

    /// Reserves a path whose first entry is at time `t0`.
    pub fn add_path_from(&mut self, path: &[Cell], t0: u32) {
        let Some(&last) = path.last() else { return };
        let n = path.len() as u32;
        for (k, &c) in path.iter().enumerate().take(path.len() - 1) {
            let t = t0 + k as u32;
            self.occupied.insert(vkey(c, t));
            let lv = self.last_visit.entry(c).or_insert(t);
            *lv = (*lv).max(t);
            let next = path[k + 1];
            if next != c {
                self.moves.insert(ekey(c, next, t));
            }
        }
        let from = t0 + n - 1;
        let p = self.parked_from.entry(last).or_insert(from);
        *p = (*p).min(from);
        self.last_time = self.last_time.max(from);
    }

    /// Reserves a path whose first entry is at time `t0` and which leaves the
    /// map after its last entry.
    pub fn add_path_until(&mut self, path: &[Cell], t0: u32) {
        for (k, &c) in path.iter().enumerate() {
            let t = t0 + k as u32;
            self.add_vertex(c, t);
            if let Some(&next) = path.get(k + 1) {
                if next != c {
                    self.moves.insert(ekey(c, next, t));
                }
            }
        }
    }

    /// Reserves a single cell at a single time.
    pub fn add_vertex(&mut self, cell: Cell, t: u32) {
        self.occupied.insert(vkey(cell, t));
        let lv = self.last_visit.entry(cell).or_insert(t);
        *lv = (*lv).max(t);
        self.last_time = self.last_time.max(t);
    }

    /// Latest time at which anything changes.
    pub fn last_time(&self) -> u32 {
        self.last_time
    }

    /// Occupied by a reserved path (static cells excluded).
    #[inline]
    pub fn occupied(&self, cell: Cell, t: u32) -> bool {
        self.occupied.contains(&vkey(cell, t)) || self.parked_from.get(&cell).is_some_and(|&f| t >= f)
    }

    #[inline]
    pub fn blocked(&self, cell: Cell, t: u32) -> bool {
        self.forbidden[cell] || self.occupied(cell, t)
    }

    /// Whether a unit at `from` at time `t` may be at `to` at `t + 1`.
    pub fn move_allowed(&self, from: Cell, to: Cell, t: u32) -> bool {
        if self.blocked(to, t + 1) {
            return false;
        }
        if from != to {
            if self.moves.contains(&ekey(to, from, t)) {
                return false;
            }
            if self.robust && (self.occupied(to, t) || self.occupied(from, t + 1)) {
                return false;
            }
        }
        true
    }

    /// Earliest time from which a unit may stay at `cell` forever, if any.
    pub fn park_time(&self, cell: Cell) -> Option<u32> {
        if self.forbidden[cell] || self.parked_from.contains_key(&cell) {
            return None;
        }
        Some(self.last_visit.get(&cell).map_or(0, |&t| t + 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_park_at_their_end() {
        let mut r = Reservations::new(10, false);
        r.add_path(&[1, 2, 3]);
        assert!(r.occupied(1, 0));
        assert!(!r.occupied(1, 1));
        assert!(r.occupied(3, 2));
        assert!(r.occupied(3, 100));
        assert_eq!(r.park_time(3), None);
        assert_eq!(r.park_time(2), Some(2));
        assert_eq!(r.park_time(5), Some(0));
    }

    #[test]
    fn vanishing_paths_free_their_last_cell() {
        let mut r = Reservations::new(10, false);
        r.add_path_until(&[1, 2], 3);
        assert!(r.occupied(1, 3) && r.occupied(2, 4));
        assert!(!r.occupied(2, 5));
        assert_eq!(r.park_time(2), Some(5));
        assert!(!r.move_allowed(2, 1, 3));
    }

    #[test]
    fn swaps_are_rejected() {
        let mut r = Reservations::new(10, false);
        r.add_path(&[1, 2]);
        assert!(!r.move_allowed(2, 1, 0));
        assert!(r.move_allowed(2, 3, 0));
    }

    #[test]
    fn robust_mode_rejects_following() {
        let mut r = Reservations::new(10, true);
        r.add_path(&[2, 3, 4]);
        // entering 2 at t=1 right after the reserved unit left it
        assert!(!r.move_allowed(1, 2, 0));
        let plain = {
            let mut p = Reservations::new(10, false);
            p.add_path(&[2, 3, 4]);
            p
        };
        assert!(plain.move_allowed(1, 2, 0));
    }
}
