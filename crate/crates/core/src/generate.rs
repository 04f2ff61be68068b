//! Random benchmark instances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::domain::{Cell, GridMap, Instance, Shelf};
use crate::error::InstanceError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("cannot place {wanted} pickup cells in 2x2 blocks on a {size}x{size} grid")]
    Blocks { wanted: usize, size: usize },
    #[error("not enough free cells: {0}")]
    Crowded(String),
    #[error("no start placement keeps the grid connected after {tries} tries")]
    Disconnected { tries: usize },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// Which generator a [`GeneratorSpec`] is meant for.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Layout {
    #[default]
    Random,
    WellFormed,
    /// The fixed 27x27 layout; only `agents` and `seed` are used.
    Warehouse,
}

/// Parameters of a generated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub size: usize,
    /// Fraction of all cells that hold a shelf.
    pub density: f64,
    pub agents: usize,
    /// Fraction of `size^2` giving the number of shelves that need relocation.
    pub relocation: f64,
    pub seed: u64,
    pub layout: Layout,
}

impl GeneratorSpec {
    pub fn new(size: usize, density: f64, agents: usize, seed: u64) -> Self {
        GeneratorSpec { size, density, agents, relocation: 0.1, seed, layout: Layout::Random }
    }

    pub fn well_formed(mut self) -> Self {
        self.layout = Layout::WellFormed;
        self
    }

    pub fn warehouse(agents: usize, seed: u64) -> Self {
        GeneratorSpec {
            size: WAREHOUSE_SIZE,
            density: 320.0 / (WAREHOUSE_SIZE * WAREHOUSE_SIZE) as f64,
            agents,
            relocation: 0.0,
            seed,
            layout: Layout::Warehouse,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GeneratorSpec { seed, ..self.clone() }
    }

    /// Number of shelves.
    pub fn shelves(&self) -> usize {
        (self.density * (self.size * self.size) as f64 + 1e-9).floor() as usize
    }

    fn relocating(&self) -> usize {
        (self.relocation * (self.size * self.size) as f64 + 1e-9).floor() as usize
    }
}

const MAX_REJECTIONS: usize = 10_000;

/// Pickup cells as disjoint 2x2 blocks; the last block is cut to hit the count.
fn place_blocks(rng: &mut ChaCha8Rng, map: &GridMap, wanted: usize, lo: usize, hi: usize) -> Result<Vec<Cell>, GenerateError> {
    let n = map.height();
    let mut used = vec![false; map.num_cells()];
    let mut cells = Vec::new();
    let mut rejections = 0;
    if wanted > 0 && hi < lo + 2 {
        return Err(GenerateError::Blocks { wanted, size: n });
    }
    while cells.len() < wanted {
        let (r, c) = (rng.gen_range(lo..hi - 1), rng.gen_range(lo..hi - 1));
        let block = [map.cell(r, c), map.cell(r, c + 1), map.cell(r + 1, c), map.cell(r + 1, c + 1)];
        if block.iter().any(|&b| used[b]) {
            rejections += 1;
            if rejections > MAX_REJECTIONS {
                return Err(GenerateError::Blocks { wanted, size: n });
            }
            continue;
        }
        for b in block {
            if cells.len() < wanted {
                used[b] = true;
                cells.push(b);
            }
        }
    }
    Ok(cells)
}

fn shelves_with_deliveries(
    rng: &mut ChaCha8Rng,
    spec: &GeneratorSpec,
    pickups: &[Cell],
    allowed: impl Fn(Cell) -> bool,
    map: &GridMap,
) -> Result<Vec<Shelf>, GenerateError> {
    let moving = spec.relocating().min(pickups.len());
    let mut free: Vec<Cell> = map.free_cells().filter(|c| !pickups.contains(c) && allowed(*c)).collect();
    if free.len() < moving {
        return Err(GenerateError::Crowded(format!("{moving} deliveries, {} cells", free.len())));
    }
    free.shuffle(rng);
    let mut order: Vec<usize> = (0..pickups.len()).collect();
    order.shuffle(rng);
    let mut shelves: Vec<Shelf> = pickups.iter().map(|&p| Shelf { pickup: p, delivery: p }).collect();
    for (k, &j) in order.iter().take(moving).enumerate() {
        shelves[j].delivery = free[k];
    }
    Ok(shelves)
}

/// Shelves in random 2x2 blocks, `floor(relocation * n^2)` of them relocating
/// to non-pickup cells, agents on the remaining cells.
pub fn generate_random(spec: &GeneratorSpec) -> Result<Instance, GenerateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let map = GridMap::open(spec.size, spec.size);
    let pickups = place_blocks(&mut rng, &map, spec.shelves(), 0, spec.size)?;
    let shelves = shelves_with_deliveries(&mut rng, spec, &pickups, |_| true, &map)?;
    let mut occupied = vec![false; map.num_cells()];
    for s in &shelves {
        occupied[s.pickup] = true;
        occupied[s.delivery] = true;
    }
    let mut rest: Vec<Cell> = map.free_cells().filter(|&c| !occupied[c]).collect();
    if rest.len() < spec.agents {
        return Err(GenerateError::Crowded(format!("{} agents, {} cells", spec.agents, rest.len())));
    }
    rest.shuffle(&mut rng);
    rest.truncate(spec.agents);
    Ok(Instance::new(map, rest, shelves)?)
}

/// Whether removing the start cells of all agents but any one keeps the free
/// cells connected.
pub fn starts_keep_connected(map: &GridMap, starts: &[Cell]) -> bool {
    let mut removed = vec![false; map.num_cells()];
    for &s in starts {
        removed[s] = true;
    }
    starts.iter().all(|&keep| {
        removed[keep] = false;
        let ok = map.is_connected_without(&removed);
        removed[keep] = true;
        ok
    })
}

fn perimeter_starts(rng: &mut ChaCha8Rng, map: &GridMap, agents: usize) -> Result<Vec<Cell>, GenerateError> {
    let (h, w) = (map.height(), map.width());
    let ring: Vec<Cell> = map
        .free_cells()
        .filter(|&c| {
            let co = map.coord(c);
            map.on_perimeter(c) && !((co.0 == 0 || co.0 == h - 1) && (co.1 == 0 || co.1 == w - 1))
        })
        .collect();
    if ring.len() < agents {
        return Err(GenerateError::Crowded(format!("{agents} agents, {} perimeter cells", ring.len())));
    }
    const TRIES: usize = 1000;
    for _ in 0..TRIES {
        let starts: Vec<Cell> = ring.choose_multiple(rng, agents).copied().collect();
        if starts_keep_connected(map, &starts) {
            return Ok(starts);
        }
    }
    Err(GenerateError::Disconnected { tries: TRIES })
}

/// Like [`generate_random`], but shelves stay off the border and agents start
/// on it (corners excluded).
pub fn generate_well_formed(spec: &GeneratorSpec) -> Result<Instance, GenerateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let map = GridMap::open(spec.size, spec.size);
    let pickups = place_blocks(&mut rng, &map, spec.shelves(), 1, spec.size.saturating_sub(1))?;
    let inner = |c: Cell| !map.on_perimeter(c);
    let shelves = shelves_with_deliveries(&mut rng, spec, &pickups, inner, &map)?;
    let starts = perimeter_starts(&mut rng, &map, spec.agents)?;
    Ok(Instance::new(map, starts, shelves)?)
}

/// Runs the generator selected by `spec.layout`.
pub fn generate(spec: &GeneratorSpec) -> Result<Instance, GenerateError> {
    match spec.layout {
        Layout::Random => generate_random(spec),
        Layout::WellFormed => generate_well_formed(spec),
        Layout::Warehouse => generate_warehouse_with(spec.seed, spec.agents),
    }
}

pub const WAREHOUSE_SIZE: usize = 27;
pub const WAREHOUSE_AGENTS: usize = 32;

/// A 27x27 warehouse: 4 rows of 8 blocks of 5x2 shelves (320 in total), all
/// of which move to the mirror image of the layout across the main diagonal,
/// with the pairing shuffled by the seed. Agents start on the border.
pub fn generate_warehouse(seed: u64) -> Result<Instance, GenerateError> {
    generate_warehouse_with(seed, WAREHOUSE_AGENTS)
}

pub fn generate_warehouse_with(seed: u64, agents: usize) -> Result<Instance, GenerateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let map = GridMap::open(WAREHOUSE_SIZE, WAREHOUSE_SIZE);
    let mut pickups = Vec::new();
    for br in 0..4 {
        for bc in 0..8 {
            for r in 2 + 6 * br..7 + 6 * br {
                for c in 2 + 3 * bc..4 + 3 * bc {
                    pickups.push(map.cell(r, c));
                }
            }
        }
    }
    let mut targets: Vec<Cell> = pickups
        .iter()
        .map(|&p| {
            let co = map.coord(p);
            map.cell(co.1, co.0)
        })
        .collect();
    targets.shuffle(&mut rng);
    let shelves = pickups.iter().zip(targets).map(|(&pickup, delivery)| Shelf { pickup, delivery }).collect();
    let starts = perimeter_starts(&mut rng, &map, agents)?;
    Ok(Instance::new(map, starts, shelves)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shelf_counts_follow_the_density() {
        assert_eq!(GeneratorSpec::new(8, 0.4, 4, 0).shelves(), 25);
        assert_eq!(GeneratorSpec::new(16, 0.2, 4, 0).shelves(), 51);
        let inst = generate_random(&GeneratorSpec::new(8, 0.4, 4, 3)).unwrap();
        assert_eq!(inst.num_shelves(), 25);
        assert_eq!(inst.shelves().iter().filter(|s| s.needs_relocation()).count(), 6);
    }

    #[test]
    fn same_seed_same_instance() {
        let spec = GeneratorSpec::new(12, 0.3, 4, 17);
        assert_eq!(generate_random(&spec).unwrap(), generate_random(&spec).unwrap());
    }

    #[test]
    fn zero_density_is_rejected() {
        assert!(generate_random(&GeneratorSpec::new(8, 0.0, 2, 0)).is_err());
    }

    #[test]
    fn too_many_agents_for_the_border() {
        // a 5x5 grid has 12 non-corner border cells
        assert!(generate_well_formed(&GeneratorSpec::new(5, 0.16, 13, 0)).is_err());
    }

    #[test]
    fn warehouse_layout() {
        let inst = generate_warehouse(1).unwrap();
        assert_eq!(inst.num_shelves(), 320);
        assert_eq!(inst.num_agents(), 32);
        let map = inst.map();
        let mut picks: Vec<Cell> = inst.pickups();
        let mut mirrored: Vec<Cell> = inst
            .deliveries()
            .iter()
            .map(|&d| {
                let co = map.coord(d);
                map.cell(co.1, co.0)
            })
            .collect();
        picks.sort_unstable();
        mirrored.sort_unstable();
        assert_eq!(picks, mirrored);
        assert!(inst.agents().iter().all(|&a| map.on_perimeter(a)));
    }
}
