//! Cost-aware 8-connected A* over a cost grid.
//!
//! Edge costs are integers in micrometer units so that A* and any other
//! shortest-path search agree exactly. A step of length `L` meters onto a cell
//! of cost `c` costs `round(L * (1 + w * c / 254) * 1e6)`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{CellIndex, CostGrid, Point2, INSCRIBED, LETHAL, UNKNOWN};

/// Cost units per meter.
pub const UNITS_PER_METER: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("no path to the goal")]
    NoPath,
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub cost_weight: f64,
    pub unknown_is_lethal: bool,
    /// Inscribed cells within this distance of the start may be crossed so
    /// the robot can leave a footprint it already occupies, meters. Lethal
    /// cells stay blocked.
    pub escape_radius_m: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            cost_weight: 0.5,
            unknown_is_lethal: true,
            escape_radius_m: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    /// Start to goal inclusive, 8-adjacent.
    pub waypoints: Vec<CellIndex>,
    /// Meters along the waypoints.
    pub length: f64,
    pub cost: f64,
    /// Exact accumulated cost in micrometer units.
    pub cost_units: u64,
}

const NEIGHBOURS: [(i64, i64, bool); 8] = [
    (-1, -1, true),
    (0, -1, false),
    (1, -1, true),
    (-1, 0, false),
    (1, 0, false),
    (-1, 1, true),
    (0, 1, false),
    (1, 1, true),
];

/// Per-byte step costs for axis and diagonal moves, `None` when blocked.
struct EdgeTable {
    axis: [Option<u64>; 256],
    diag: [Option<u64>; 256],
    axis_min: u64,
    diag_min: u64,
}

impl EdgeTable {
    fn new(resolution: f64, cfg: &PlannerConfig) -> Self {
        let mut axis = [None; 256];
        let mut diag = [None; 256];
        let d = std::f64::consts::SQRT_2 * resolution;
        for c in 0..=255u8 {
            let effective = match c {
                UNKNOWN if cfg.unknown_is_lethal => continue,
                UNKNOWN => 0,
                INSCRIBED | LETHAL => continue,
                c => c,
            };
            let factor = 1.0 + cfg.cost_weight * f64::from(effective) / 254.0;
            axis[c as usize] = Some(step_units(resolution * factor));
            diag[c as usize] = Some(step_units(d * factor));
        }
        Self {
            axis,
            diag,
            axis_min: step_units(resolution),
            diag_min: step_units(d),
        }
    }

    fn octile(&self, a: CellIndex, b: CellIndex) -> u64 {
        let dx = a.col.abs_diff(b.col) as u64;
        let dy = a.row.abs_diff(b.row) as u64;
        let (lo, hi) = (dx.min(dy), dx.max(dy));
        self.diag_min * lo + self.axis_min * (hi - lo)
    }
}

fn step_units(meters: f64) -> u64 {
    (meters * UNITS_PER_METER).round() as u64
}

/// Sum of step lengths: one resolution per axis step, sqrt(2) resolutions per
/// diagonal step.
pub fn path_length(waypoints: &[CellIndex], resolution: f64) -> f64 {
    waypoints
        .windows(2)
        .map(|w| {
            if w[0].col != w[1].col && w[0].row != w[1].row {
                std::f64::consts::SQRT_2 * resolution
            } else {
                resolution
            }
        })
        .sum()
}

enum Target {
    Cell(usize),
    /// Leave the grid towards a world point: every boundary cell connects to
    /// a virtual goal at the straight-line exit cost.
    Outside(Point2),
}

struct Search<'a> {
    grid: &'a CostGrid,
    table: EdgeTable,
    start: usize,
    escape: Option<(CellIndex, f64)>,
}

impl Search<'_> {
    fn step_cost(&self, to: usize, diagonal: bool) -> Option<u64> {
        let c = self.grid.cells()[to];
        let t = if diagonal {
            &self.table.diag
        } else {
            &self.table.axis
        };
        if let Some(u) = t[c as usize] {
            return Some(u);
        }
        // Escape hatch for inscribed cells next to the start.
        let (s, r) = self.escape?;
        if c != INSCRIBED {
            return None;
        }
        let cell = self.grid.cell_at(to);
        let res = self.grid.resolution();
        let d = ((cell.col as f64 - s.col as f64).hypot(cell.row as f64 - s.row as f64)) * res;
        (d <= r + 1e-9)
            .then(|| t[(INSCRIBED - 1) as usize])
            .flatten()
    }

    fn run(&self, target: Target) -> Result<Path, PlanError> {
        let g = self.grid;
        let (w, h) = (g.width(), g.height());
        let n = w * h;
        let virtual_goal = n;
        let goal_point = match target {
            Target::Outside(p) => Some(p),
            Target::Cell(_) => None,
        };
        let goal_cell = match target {
            Target::Cell(i) => Some(g.cell_at(i)),
            Target::Outside(_) => None,
        };
        let res = g.resolution();
        let exit_units = |i: usize| -> u64 {
            let p = goal_point.expect("outside target");
            let c = g.cell_at(i);
            let cx = g.origin().x + (c.col as f64 + 0.5) * res;
            let cy = g.origin().y + (c.row as f64 + 0.5) * res;
            step_units(Point2::new(cx, cy).distance(&p))
        };
        let shrink = 1.0 - 0.5 / self.table.axis_min.max(1) as f64;
        let heuristic = |i: usize| -> u64 {
            match (goal_cell, goal_point) {
                (Some(gc), _) => self.table.octile(g.cell_at(i), gc),
                (None, Some(p)) => {
                    let c = g.cell_at(i);
                    let cx = g.origin().x + (c.col as f64 + 0.5) * res;
                    let cy = g.origin().y + (c.row as f64 + 0.5) * res;
                    // Each rounded step undercuts its length by at most half a
                    // unit, and so does the exit cost.
                    let units = Point2::new(cx, cy).distance(&p) * UNITS_PER_METER * shrink;
                    (units.floor() as u64).saturating_sub(1)
                }
                (None, None) => 0,
            }
        };

        let mut best = vec![u64::MAX; n + 1];
        let mut parent = vec![usize::MAX; n + 1];
        let mut heap = BinaryHeap::new();
        best[self.start] = 0;
        heap.push(Reverse((heuristic(self.start), self.start, 0u64)));
        let goal_index = goal_cell.map(|c| g.index(c)).unwrap_or(virtual_goal);

        while let Some(Reverse((_, i, cost))) = heap.pop() {
            if cost > best[i] {
                continue;
            }
            if i == goal_index {
                break;
            }
            if i == virtual_goal {
                continue;
            }
            let c = g.cell_at(i);
            if goal_point.is_some()
                && (c.col == 0 || c.row == 0 || c.col + 1 == w || c.row + 1 == h)
            {
                let nc = cost + exit_units(i);
                if nc < best[virtual_goal] {
                    best[virtual_goal] = nc;
                    parent[virtual_goal] = i;
                    heap.push(Reverse((nc, virtual_goal, nc)));
                }
            }
            for &(dx, dy, diagonal) in &NEIGHBOURS {
                let (nx, ny) = (c.col as i64 + dx, c.row as i64 + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                let Some(step) = self.step_cost(j, diagonal) else {
                    continue;
                };
                let nc = cost + step;
                if nc < best[j] {
                    best[j] = nc;
                    parent[j] = i;
                    heap.push(Reverse((nc + heuristic(j), j, nc)));
                }
            }
        }

        if best[goal_index] == u64::MAX {
            return Err(PlanError::NoPath);
        }
        let mut cells = Vec::new();
        let mut cur = if goal_index == virtual_goal {
            parent[virtual_goal]
        } else {
            goal_index
        };
        loop {
            cells.push(g.cell_at(cur));
            if cur == self.start {
                break;
            }
            cur = parent[cur];
        }
        cells.reverse();
        let cost_units = best[goal_index];
        Ok(Path {
            length: path_length(&cells, res),
            waypoints: cells,
            cost: cost_units as f64 / UNITS_PER_METER,
            cost_units,
        })
    }
}

fn prepare<'a>(
    grid: &'a CostGrid,
    start: CellIndex,
    cfg: &PlannerConfig,
) -> Result<Search<'a>, PlanError> {
    if !(cfg.cost_weight >= 0.0 && cfg.cost_weight.is_finite()) {
        return Err(PlanError::InvalidEndpoint(format!(
            "cost_weight {}",
            cfg.cost_weight
        )));
    }
    if !grid.contains(start) {
        return Err(PlanError::InvalidEndpoint(format!(
            "start {start:?} outside the grid"
        )));
    }
    let table = EdgeTable::new(grid.resolution(), cfg);
    let escape = (cfg.escape_radius_m > 0.0).then_some((start, cfg.escape_radius_m));
    let start_byte = grid.cells()[grid.index(start)];
    if escape.is_none() && table.axis[start_byte as usize].is_none() {
        return Err(PlanError::InvalidEndpoint(format!(
            "start {start:?} has cost {start_byte}"
        )));
    }
    Ok(Search {
        grid,
        table,
        start: grid.index(start),
        escape,
    })
}

/// Cheapest path from `start` to `goal` under the configured edge weights.
///
/// Equal-priority nodes are expanded in row-major order, so identical inputs
/// always give identical waypoints.
pub fn plan(
    grid: &CostGrid,
    start: CellIndex,
    goal: CellIndex,
    cfg: &PlannerConfig,
) -> Result<Path, PlanError> {
    let search = prepare(grid, start, cfg)?;
    if !grid.contains(goal) {
        return Err(PlanError::InvalidEndpoint(format!(
            "goal {goal:?} outside the grid"
        )));
    }
    let goal_byte = grid.cells()[grid.index(goal)];
    if search.table.axis[goal_byte as usize].is_none() {
        return Err(PlanError::InvalidEndpoint(format!(
            "goal {goal:?} has cost {goal_byte}"
        )));
    }
    search.run(Target::Cell(grid.index(goal)))
}

/// Plans towards a world point. If the point lies outside the grid, the path
/// ends at the boundary cell minimising path cost plus straight-line distance
/// from that cell to the point.
pub fn plan_toward(
    grid: &CostGrid,
    start: CellIndex,
    goal: Point2,
    cfg: &PlannerConfig,
) -> Result<Path, PlanError> {
    match grid.world_to_cell(goal) {
        Ok(cell) => plan(grid, start, cell, cfg),
        Err(_) => prepare(grid, start, cfg)?.run(Target::Outside(goal)),
    }
}
