use serde::{Deserialize, Serialize};

use super::{CellBounds, Layer, LayerEffect, LayerError, LayerInputs, LayerKind};
use crate::grid::{CostGrid, Pose2D, FREE, LETHAL, UNKNOWN};
use crate::scan::RangeScan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObstacleConfig {
    /// Beams are raytraced free up to this distance, meters.
    pub raytrace_max_range: f64,
    /// Returns closer than this mark their endpoint lethal, meters.
    pub obstacle_max_range: f64,
}

impl Default for ObstacleConfig {
    fn default() -> Self {
        Self {
            raytrace_max_range: 8.0,
            obstacle_max_range: 8.0,
        }
    }
}

/// Marks laser returns lethal and raytraces the space in front of them free.
pub struct ObstacleLayer {
    config: ObstacleConfig,
    enabled: bool,
    scratch: CostGrid,
    // Per beam: (signed endpoint cell, marks?, raytrace end cell)
    beams: Vec<Beam>,
}

#[derive(Debug, Clone, Copy)]
struct Beam {
    mark: Option<(i64, i64)>,
    trace_end: (i64, i64),
}

impl ObstacleLayer {
    pub fn new(config: ObstacleConfig) -> Result<Self, LayerError> {
        if !(config.raytrace_max_range >= 0.0 && config.obstacle_max_range >= 0.0) {
            return Err(LayerError::InvalidConfig {
                layer: "obstacle",
                reason: "ranges must be non-negative".into(),
            });
        }
        Ok(Self {
            config,
            enabled: true,
            scratch: CostGrid::new(0, 0, 1.0, Default::default(), UNKNOWN)?,
            beams: Vec::new(),
        })
    }

    pub fn config(&self) -> &ObstacleConfig {
        &self.config
    }

    /// Grid of this cycle's observations (FREE / LETHAL / UNKNOWN), same
    /// geometry as the master.
    pub fn scratch(&self) -> &CostGrid {
        &self.scratch
    }

    /// Applies one scan directly, outside of a stack.
    pub fn obstacle_update(
        &mut self,
        master: &mut CostGrid,
        scan: &RangeScan,
        sensor: Pose2D,
    ) -> Result<(), LayerError> {
        let inputs = LayerInputs {
            scan: Some((scan, sensor)),
            ..Default::default()
        };
        if let Some(b) = self.bounds(master, &inputs)? {
            self.update_costs(master, b, &inputs)?;
        }
        Ok(())
    }

    fn plan_beams(&mut self, master: &CostGrid, scan: &RangeScan, sensor: Pose2D) {
        self.beams.clear();
        for (i, &range) in scan.ranges.iter().enumerate() {
            if !range.is_finite() || range <= 0.0 {
                continue;
            }
            let angle = sensor.theta + scan.beam_angle(i);
            let (s, c) = angle.sin_cos();
            let hit = scan.is_return(i) && range < self.config.obstacle_max_range;
            let trace = range.min(self.config.raytrace_max_range);
            let end = master.world_to_cell_signed(sensor.x + c * trace, sensor.y + s * trace);
            let mark = hit
                .then(|| master.world_to_cell_signed(sensor.x + c * range, sensor.y + s * range));
            self.beams.push(Beam {
                mark,
                trace_end: end,
            });
        }
    }
}

/// Cells on the Bresenham line from `from` to `to`, endpoint excluded.
pub fn bresenham(from: (i64, i64), to: (i64, i64)) -> impl Iterator<Item = (i64, i64)> {
    let dx = (to.0 - from.0).abs();
    let dy = -(to.1 - from.1).abs();
    let sx = if from.0 < to.0 { 1 } else { -1 };
    let sy = if from.1 < to.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut cur = from;
    std::iter::from_fn(move || {
        if cur == to {
            return None;
        }
        let out = cur;
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            cur.0 += sx;
        }
        if e2 <= dx {
            err += dx;
            cur.1 += sy;
        }
        Some(out)
    })
}

impl Layer for ObstacleLayer {
    fn name(&self) -> &str {
        "obstacle"
    }

    fn kind(&self) -> LayerKind {
        LayerKind::Obstacle
    }

    fn enabled(&self) -> bool {
        self.enabled
    }

    fn set_enabled(&mut self, enabled: bool) {
        self.enabled = enabled;
    }

    fn bounds(
        &mut self,
        master: &CostGrid,
        inputs: &LayerInputs<'_>,
    ) -> Result<Option<CellBounds>, LayerError> {
        let Some((scan, sensor)) = inputs.scan else {
            self.beams.clear();
            return Ok(None);
        };
        let origin = master.world_to_cell_signed(sensor.x, sensor.y);
        if master.signed_to_cell(origin.0, origin.1).is_none() {
            return Err(LayerError::SensorOutsideWindow {
                x: sensor.x,
                y: sensor.y,
            });
        }
        self.plan_beams(master, scan, sensor);
        let cells = std::iter::once(origin).chain(
            self.beams
                .iter()
                .flat_map(|b| std::iter::once(b.trace_end).chain(b.mark)),
        );
        Ok(CellBounds::around(master, cells))
    }

    fn update_costs(
        &mut self,
        master: &mut CostGrid,
        bounds: CellBounds,
        inputs: &LayerInputs<'_>,
    ) -> Result<LayerEffect, LayerError> {
        let Some((_, sensor)) = inputs.scan else {
            return Ok(LayerEffect::default());
        };
        if !self.scratch.same_geometry(master) {
            self.scratch = master.blank_like(UNKNOWN);
        } else {
            self.scratch.fill(UNKNOWN);
        }
        let origin = master.world_to_cell_signed(sensor.x, sensor.y);
        let w = master.width();
        let inside = |c: (i64, i64)| {
            c.0 >= bounds.min_col as i64
                && c.1 >= bounds.min_row as i64
                && c.0 < bounds.max_col as i64
                && c.1 < bounds.max_row as i64
        };
        // Marks first, so raytracing never erases a return seen this cycle.
        for b in &self.beams {
            if let Some(m) = b.mark.filter(|&m| inside(m)) {
                self.scratch.cells_mut()[m.1 as usize * w + m.0 as usize] = LETHAL;
            }
        }
        for b in &self.beams {
            for c in bresenham(origin, b.trace_end) {
                if !inside(c) {
                    break;
                }
                let i = c.1 as usize * w + c.0 as usize;
                if self.scratch.cells()[i] != LETHAL && master.cells()[i] != LETHAL {
                    self.scratch.cells_mut()[i] = FREE;
                }
            }
        }
        let scratch = self.scratch.cells();
        let cells = master.cells_mut();
        for row in bounds.min_row..bounds.max_row {
            for i in row * w + bounds.min_col..row * w + bounds.max_col {
                match scratch[i] {
                    LETHAL => cells[i] = LETHAL,
                    FREE => cells[i] = FREE,
                    _ => {}
                }
            }
        }
        Ok(LayerEffect::default())
    }
}
