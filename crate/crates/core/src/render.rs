//! Static SVG frames of an execution log.
//!
//! Each frame draws the agent deck (circles) and, on top of it, the shelf
//! deck (translucent squares). Delivery cells of shelves that still have to
//! move are outlined. An agent holding a shelf is drawn filled.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::domain::{Cell, ExecutionLog, Instance};
use crate::error::FormatError;

const CELL: usize = 24;

fn xy(instance: &Instance, c: Cell) -> (usize, usize) {
    let co = instance.map().coord(c);
    (co.1 * CELL, co.0 * CELL)
}

pub fn render_frame(instance: &Instance, log: &ExecutionLog, t: usize) -> String {
    let map = instance.map();
    let (w, h) = (map.width() * CELL, map.height() * CELL);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{}" viewBox="0 0 {w} {}">"#, h + CELL, h + CELL);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for c in 0..map.num_cells() {
        let (x, y) = xy(instance, c);
        let fill = if map.is_free(c) { "none" } else { "#333" };
        let _ = writeln!(s, r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#ddd"/>"##);
    }
    for (j, shelf) in instance.shelves().iter().enumerate() {
        if shelf.needs_relocation() && log.shelf_at(j, t) != shelf.delivery {
            let (x, y) = xy(instance, shelf.delivery);
            let _ = writeln!(
                s,
                r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#c60" stroke-dasharray="3,2"/>"##,
                x + 2,
                y + 2,
                CELL - 4,
                CELL - 4
            );
        }
    }
    let r = CELL / 2 - 3;
    for i in 0..log.agent_paths.len() {
        let (x, y) = xy(instance, log.agent_at(i, t));
        let fill = if log.carried(i, t).is_some() { "#2a6" } else { "white" };
        let _ = writeln!(
            s,
            r##"<circle cx="{}" cy="{}" r="{r}" fill="{fill}" stroke="#2a6" stroke-width="2"><title>agent {i}</title></circle>"##,
            x + CELL / 2,
            y + CELL / 2
        );
    }
    for (j, shelf) in instance.shelves().iter().enumerate() {
        let (x, y) = xy(instance, log.shelf_at(j, t));
        let fill = if shelf.needs_relocation() { "#c60" } else { "#888" };
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" fill-opacity="0.45"><title>shelf {j}</title></rect>"#,
            x + 4,
            y + 4,
            CELL - 8,
            CELL - 8
        );
    }
    let _ = writeln!(s, r#"<text x="4" y="{}" font-family="monospace" font-size="14">t = {t}</text>"#, h + CELL - 6);
    s.push_str("</svg>\n");
    s
}

/// Writes `frame_0000.svg` and onwards into `dir`, one per timestep.
pub fn render_frames(instance: &Instance, log: &ExecutionLog, dir: &Path) -> Result<Vec<PathBuf>, FormatError> {
    std::fs::create_dir_all(dir).map_err(|source| FormatError::Io { path: dir.to_path_buf(), source })?;
    (0..log.horizon().max(1))
        .map(|t| {
            let path = dir.join(format!("frame_{t:04}.svg"));
            std::fs::write(&path, render_frame(instance, log, t))
                .map_err(|source| FormatError::Io { path: path.clone(), source })?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{example_instance, example_trajectories};

    fn still_log() -> ExecutionLog {
        let inst = example_instance();
        ExecutionLog {
            agent_paths: inst.agents().iter().map(|&a| vec![a]).collect(),
            carrying: vec![vec![None]; 2],
            shelf_paths: example_trajectories().paths(),
        }
    }

    #[test]
    fn frame_has_every_agent_and_shelf() {
        let inst = example_instance();
        let svg = render_frame(&inst, &still_log(), 0);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg.matches("<title>shelf").count(), 4);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn one_file_per_timestep_and_log_untouched() {
        let inst = example_instance();
        let log = still_log();
        let before = log.clone();
        let dir = tempfile::tempdir().unwrap();
        let files = render_frames(&inst, &log, dir.path()).unwrap();
        assert_eq!(files.len(), log.horizon());
        assert_eq!(log, before);
        assert_eq!((log.makespan(), log.flowtime()), (before.makespan(), before.flowtime()));
    }
}
