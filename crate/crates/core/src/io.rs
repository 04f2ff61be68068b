//! On-disk formats: MovingAI maps, instance JSON and execution log JSON.
//!
//! Instance files name their map by a path relative to the instance file.
//! All locations are `[row, col]` pairs. In logs a carrying entry of `-1`
//! means nothing is carried.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{Cell, Coord, ExecutionLog, GridMap, Instance, Shelf};
use crate::error::FormatError;

fn read(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<(), FormatError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| FormatError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, FormatError> {
    serde_json::from_str(text).map_err(|source| FormatError::Json { path: path.to_path_buf(), source })
}

fn to_json<T: Serialize>(path: &Path, value: &T) -> Result<String, FormatError> {
    serde_json::to_string_pretty(value).map_err(|source| FormatError::Json { path: path.to_path_buf(), source })
}

pub fn load_map(path: &Path) -> Result<GridMap, FormatError> {
    read(path)?.parse()
}

pub fn save_map(path: &Path, map: &GridMap) -> Result<(), FormatError> {
    write(path, &map.to_movingai())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShelfRecord {
    pub pickup: Coord,
    pub delivery: Coord,
}

/// The instance file as stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub map: PathBuf,
    pub agents: Vec<Coord>,
    pub shelves: Vec<ShelfRecord>,
}

fn cell_of(map: &GridMap, co: Coord) -> Result<Cell, FormatError> {
    map.cell_of(co).ok_or(FormatError::Instance(crate::error::InstanceError::OutOfBounds(co)))
}

impl InstanceRecord {
    pub fn from_instance(instance: &Instance, map: impl Into<PathBuf>) -> Self {
        let m = instance.map();
        InstanceRecord {
            map: map.into(),
            agents: instance.agents().iter().map(|&a| m.coord(a)).collect(),
            shelves: instance
                .shelves()
                .iter()
                .map(|s| ShelfRecord { pickup: m.coord(s.pickup), delivery: m.coord(s.delivery) })
                .collect(),
        }
    }

    pub fn to_instance(&self, map: GridMap) -> Result<Instance, FormatError> {
        let agents = self.agents.iter().map(|&a| cell_of(&map, a)).collect::<Result<_, _>>()?;
        let shelves = self
            .shelves
            .iter()
            .map(|s| Ok(Shelf { pickup: cell_of(&map, s.pickup)?, delivery: cell_of(&map, s.delivery)? }))
            .collect::<Result<_, FormatError>>()?;
        Ok(Instance::new(map, agents, shelves)?)
    }
}

pub fn load_instance(path: &Path) -> Result<Instance, FormatError> {
    let record: InstanceRecord = parse_json(path, &read(path)?)?;
    let dir = path.parent().unwrap_or(Path::new(""));
    let map = load_map(&dir.join(&record.map))?;
    record.to_instance(map)
}

/// Writes the instance and its map, the map next to it as `<stem>.map`.
pub fn save_instance(path: &Path, instance: &Instance) -> Result<(), FormatError> {
    let map_path = path.with_extension("map");
    let name = map_path.file_name().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("instance.map"));
    save_map(&map_path, instance.map())?;
    write(path, &to_json(path, &InstanceRecord::from_instance(instance, name))?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub path: Vec<Coord>,
    pub carrying: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShelfPathRecord {
    pub path: Vec<Coord>,
}

/// The execution log file as stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub makespan: usize,
    pub flowtime: usize,
    pub agents: Vec<AgentRecord>,
    pub shelves: Vec<ShelfPathRecord>,
}

impl LogRecord {
    pub fn from_log(map: &GridMap, log: &ExecutionLog) -> Self {
        let coords = |p: &Vec<Cell>| p.iter().map(|&c| map.coord(c)).collect();
        LogRecord {
            makespan: log.makespan(),
            flowtime: log.flowtime(),
            agents: log
                .agent_paths
                .iter()
                .zip(&log.carrying)
                .map(|(p, c)| AgentRecord {
                    path: coords(p),
                    carrying: c.iter().map(|s| s.map_or(-1, |j| j as i64)).collect(),
                })
                .collect(),
            shelves: log.shelf_paths.iter().map(|p| ShelfPathRecord { path: coords(p) }).collect(),
        }
    }

    /// The stored makespan and flowtime are not trusted; they are recomputed
    /// from the paths whenever needed.
    pub fn to_log(&self, map: &GridMap) -> Result<ExecutionLog, FormatError> {
        let cells = |p: &[Coord]| -> Result<Vec<Cell>, FormatError> {
            p.iter().map(|&co| map.cell_of(co).ok_or_else(|| FormatError::Log(format!("location {co} is outside the map")))).collect()
        };
        let mut log = ExecutionLog::default();
        for a in &self.agents {
            log.agent_paths.push(cells(&a.path)?);
            let carrying = a
                .carrying
                .iter()
                .map(|&j| match j {
                    -1 => Ok(None),
                    j if j >= 0 => Ok(Some(j as usize)),
                    j => Err(FormatError::Log(format!("bad shelf id {j}"))),
                })
                .collect::<Result<_, _>>()?;
            log.carrying.push(carrying);
        }
        for s in &self.shelves {
            log.shelf_paths.push(cells(&s.path)?);
        }
        Ok(log)
    }
}

pub fn load_log(path: &Path, map: &GridMap) -> Result<ExecutionLog, FormatError> {
    let record: LogRecord = parse_json(path, &read(path)?)?;
    record.to_log(map)
}

pub fn save_log(path: &Path, map: &GridMap, log: &ExecutionLog) -> Result<(), FormatError> {
    write(path, &to_json(path, &LogRecord::from_log(map, log))?)
}
