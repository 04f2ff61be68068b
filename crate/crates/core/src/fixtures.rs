//! The small worked example used throughout the tests: a 3x5 grid, two
//! agents and four shelves, of which two need relocation.
//!
//! ```text
//!   col 0 1 2 3 4
//! row 0   @ @ . @ @
//! row 1   . . . . .
//! row 2   . @ @ . .
//! ```
//!
//! Agent a1 starts at (1,4), agent a2 at (2,0). Shelf s1 sits at (1,2) and
//! s4 at (1,0), both already delivered. Shelf s2 goes from (1,1) to (1,3)
//! through the cell of s1, which has to step aside into the dead end (0,2).
//! Shelf s3 goes from (2,4) to (2,3).

use crate::domain::{Cell, Coord, ExecutionLog, GridMap, Instance, Shelf, TrajectorySet};

pub fn example_map() -> GridMap {
    GridMap::from_rows(&["@@.@@", ".....", ".@@.."]).expect("fixture map")
}

fn cells(map: &GridMap, coords: &[(usize, usize)]) -> Vec<Cell> {
    coords.iter().map(|&(r, c)| map.cell_of(Coord(r, c)).expect("fixture cell")).collect()
}

pub fn example_instance() -> Instance {
    let map = example_map();
    let agents = cells(&map, &[(1, 4), (2, 0)]);
    let shelf = |p: (usize, usize), d: (usize, usize)| Shelf { pickup: map.cell(p.0, p.1), delivery: map.cell(d.0, d.1) };
    let shelves = vec![shelf((1, 2), (1, 2)), shelf((1, 1), (1, 3)), shelf((2, 4), (2, 3)), shelf((1, 0), (1, 0))];
    Instance::new(map, agents, shelves).expect("fixture instance")
}

/// The shelf trajectories of the example.
pub fn example_trajectories() -> TrajectorySet {
    let inst = example_instance();
    let map = inst.map();
    let paths = vec![
        cells(map, &[(1, 2), (0, 2), (1, 2)]),
        cells(map, &[(1, 1), (1, 2), (1, 3)]),
        cells(map, &[(2, 4), (2, 3)]),
        cells(map, &[(1, 0)]),
    ];
    TrajectorySet::from_paths(&inst, paths)
}

/// The hand-made execution of the example: makespan 7, flowtime 14.
pub fn example_reference_log() -> ExecutionLog {
    let map = example_map();
    let a1 = cells(&map, &[(1, 4), (2, 4), (2, 3), (1, 3), (1, 2), (1, 1), (1, 2), (1, 3)]);
    let a2 = cells(&map, &[(2, 0), (1, 0), (1, 1), (1, 2), (0, 2), (0, 2), (0, 2), (1, 2)]);
    let s1 = cells(&map, &[(1, 2), (1, 2), (1, 2), (1, 2), (0, 2), (0, 2), (0, 2), (1, 2)]);
    let s2 = cells(&map, &[(1, 1), (1, 1), (1, 1), (1, 1), (1, 1), (1, 1), (1, 2), (1, 3)]);
    let s3 = cells(&map, &[(2, 4), (2, 4), (2, 3)]);
    let s4 = cells(&map, &[(1, 0)]);
    let mut c1 = vec![None; 8];
    c1[1] = Some(2);
    c1[5] = Some(1);
    c1[6] = Some(1);
    let mut c2 = vec![None; 8];
    c2[3] = Some(0);
    c2[6] = Some(0);
    ExecutionLog { agent_paths: vec![a1, a2], carrying: vec![c1, c2], shelf_paths: vec![s1, s2, s3, s4] }
}
