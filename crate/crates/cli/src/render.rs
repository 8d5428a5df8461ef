//! Colorized costmap snapshots.
//!
//! Grid row 0 is the minimum-y row, so it is written as the last image row
//! and the picture reads like a map with +y up.

use std::path::Path;

use anyhow::{bail, Context, Result};
use grassnav_core::netpbm::Pixmap;
use grassnav_core::{FREE, LETHAL, UNKNOWN};

pub const RED: [u8; 3] = [255, 0, 0];
pub const YELLOW: [u8; 3] = [255, 255, 0];
pub const GREEN: [u8; 3] = [0, 255, 0];
pub const WHITE: [u8; 3] = [255, 255, 255];
pub const GREY: [u8; 3] = [128, 128, 128];
pub const BLUE: [u8; 3] = [0, 0, 255];

pub fn cost_color(cost: u8) -> [u8; 3] {
    match cost {
        FREE => WHITE,
        LETHAL => RED,
        UNKNOWN => GREY,
        _ => YELLOW,
    }
}

/// Renders `cells` (row-major, row 0 at minimum y). Cleared cells draw green
/// over their cost color and the robot cell draws blue over everything.
pub fn colorize(
    cells: &[u8],
    width: usize,
    height: usize,
    cleared: &[usize],
    robot: Option<usize>,
) -> Result<Pixmap> {
    if cells.len() != width * height {
        bail!("{} cells for a {width}x{height} grid", cells.len());
    }
    let mut colors: Vec<[u8; 3]> = cells.iter().map(|&c| cost_color(c)).collect();
    for &i in cleared {
        if i >= colors.len() {
            bail!("cleared cell {i} outside {width}x{height} grid");
        }
        colors[i] = GREEN;
    }
    if let Some(i) = robot {
        if i >= colors.len() {
            bail!("robot cell {i} outside {width}x{height} grid");
        }
        colors[i] = BLUE;
    }
    let mut rgb = Vec::with_capacity(colors.len());
    for row in (0..height).rev() {
        rgb.extend_from_slice(&colors[row * width..(row + 1) * width]);
    }
    Ok(Pixmap { width, height, rgb })
}

/// Parses a cleared-cell list: one `col,row` pair per line. Blank lines and
/// lines starting with `#` are skipped. Returns row-major indices.
pub fn parse_cell_list(text: &str, width: usize, height: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (c, r) = line
            .split_once(',')
            .with_context(|| format!("line {}: expected `col,row`, got {line:?}", n + 1))?;
        let col: usize = c
            .trim()
            .parse()
            .with_context(|| format!("line {}: bad column", n + 1))?;
        let row: usize = r
            .trim()
            .parse()
            .with_context(|| format!("line {}: bad row", n + 1))?;
        if col >= width || row >= height {
            bail!(
                "line {}: cell ({col}, {row}) outside {width}x{height} grid",
                n + 1
            );
        }
        out.push(row * width + col);
    }
    Ok(out)
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}
