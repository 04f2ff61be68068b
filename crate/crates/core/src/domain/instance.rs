use std::collections::HashSet;

use crate::error::InstanceError;

use super::grid::{Cell, GridMap};

/// One shelf: where it starts and where it has to end up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shelf {
    pub pickup: Cell,
    pub delivery: Cell,
}

impl Shelf {
    pub fn needs_relocation(&self) -> bool {
        self.pickup != self.delivery
    }
}

/// A shelf rearrangement problem: agents, shelves and the map they share.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    map: GridMap,
    agents: Vec<Cell>,
    shelves: Vec<Shelf>,
}

impl Instance {
    /// Builds an instance, checking every invariant.
    pub fn new(map: GridMap, agents: Vec<Cell>, shelves: Vec<Shelf>) -> Result<Self, InstanceError> {
        let inst = Instance { map, agents, shelves };
        inst.check()?;
        Ok(inst)
    }

    fn check(&self) -> Result<(), InstanceError> {
        let map = &self.map;
        let cells = self
            .agents
            .iter()
            .chain(self.shelves.iter().flat_map(|s| [&s.pickup, &s.delivery]));
        for &c in cells {
            if !map.in_bounds(c) {
                return Err(InstanceError::OutOfBounds(map.coord(c)));
            }
            if !map.is_free(c) {
                return Err(InstanceError::Blocked(map.coord(c)));
            }
        }
        if self.agents.is_empty() {
            return Err(InstanceError::NoAgents);
        }
        if self.shelves.len() < self.agents.len() {
            return Err(InstanceError::TooFewShelves { shelves: self.shelves.len(), agents: self.agents.len() });
        }
        let dup = |what: &'static str, cells: &mut dyn Iterator<Item = Cell>| {
            let mut seen = HashSet::new();
            for c in cells {
                if !seen.insert(c) {
                    return Err(InstanceError::Duplicate { what, at: map.coord(c) });
                }
            }
            Ok(())
        };
        dup("agent start", &mut self.agents.iter().copied())?;
        dup("pickup", &mut self.shelves.iter().map(|s| s.pickup))?;
        dup("delivery", &mut self.shelves.iter().map(|s| s.delivery))?;
        if !map.is_connected() {
            return Err(InstanceError::Disconnected);
        }
        Ok(())
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn agents(&self) -> &[Cell] {
        &self.agents
    }

    pub fn shelves(&self) -> &[Shelf] {
        &self.shelves
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_shelves(&self) -> usize {
        self.shelves.len()
    }

    pub fn pickups(&self) -> Vec<Cell> {
        self.shelves.iter().map(|s| s.pickup).collect()
    }

    pub fn deliveries(&self) -> Vec<Cell> {
        self.shelves.iter().map(|s| s.delivery).collect()
    }

    /// Same map and shelves, different agents.
    pub fn with_agents(&self, agents: Vec<Cell>) -> Result<Self, InstanceError> {
        Instance::new(self.map.clone(), agents, self.shelves.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shelf(p: Cell, d: Cell) -> Shelf {
        Shelf { pickup: p, delivery: d }
    }

    #[test]
    fn rejects_more_agents_than_shelves() {
        let map = GridMap::open(3, 3);
        let err = Instance::new(map, vec![0, 1], vec![shelf(4, 4)]).unwrap_err();
        assert_eq!(err, InstanceError::TooFewShelves { shelves: 1, agents: 2 });
    }

    #[test]
    fn rejects_duplicates_and_blocked() {
        let map = GridMap::from_rows(&["..@", "..."]).unwrap();
        assert!(matches!(
            Instance::new(map.clone(), vec![0, 0], vec![shelf(3, 3), shelf(4, 4)]),
            Err(InstanceError::Duplicate { what: "agent start", .. })
        ));
        assert!(matches!(
            Instance::new(map.clone(), vec![0], vec![shelf(3, 4), shelf(4, 4)]),
            Err(InstanceError::Duplicate { what: "delivery", .. })
        ));
        assert!(matches!(Instance::new(map, vec![2], vec![shelf(3, 3)]), Err(InstanceError::Blocked(_))));
    }

    #[test]
    fn rejects_disconnected_maps() {
        let map = GridMap::from_rows(&[".@."]).unwrap();
        assert_eq!(Instance::new(map, vec![0], vec![shelf(2, 2)]).unwrap_err(), InstanceError::Disconnected);
    }
}
