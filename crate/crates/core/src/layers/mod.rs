//! The layered local costmap.
//!
//! Each cycle the master window is rolled to the robot, reset to UNKNOWN, and
//! every enabled layer is applied in stack order:
//! static, obstacle, voxel, clearing, inflation. The clearing layer removes
//! marks that range sensors left on vision-classified traversable terrain,
//! so it has to run after the marking layers and before inflation.

mod clearing;
mod inflation;
mod obstacle;
mod stack;
mod static_map;
mod voxel;

pub use clearing::{ClearingConfig, ClearingLayer};
pub use inflation::{inflation_cost, InflationConfig, InflationLayer};
pub use obstacle::{bresenham, ObstacleConfig, ObstacleLayer};
pub use stack::{stack_update, LayerStack, StackConfig};
pub use static_map::StaticLayer;
pub use voxel::{VoxelConfig, VoxelLayer};

use thiserror::Error;

use crate::grid::{CellIndex, CostGrid, GridError, Pose2D};
use crate::perception::LabeledCloud;
use crate::scan::RangeScan;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayerError {
    #[error("sensor at ({x:.3}, {y:.3}) is outside the local window")]
    SensorOutsideWindow { x: f64, y: f64 },
    #[error("invalid {layer} configuration: {reason}")]
    InvalidConfig { layer: &'static str, reason: String },
    #[error("layer order violates static < obstacle < voxel < clearing < inflation: {0}")]
    Ordering(String),
    #[error("cloud must be in the world frame")]
    WrongFrame,
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayerKind {
    Static,
    Obstacle,
    Voxel,
    Clearing,
    Inflation,
}

/// Sensor data for one cycle. All clouds are in the world frame.
///
/// `obstacle_cloud` is the raw depth cloud fed to the voxel layer.
/// `traversable_cloud` is the semantic cloud fed to the clearing layer; any
/// obstacle-class points it carries veto clearing.
#[derive(Debug, Clone, Copy, Default)]
pub struct LayerInputs<'a> {
    pub scan: Option<(&'a RangeScan, Pose2D)>,
    pub obstacle_cloud: Option<&'a LabeledCloud>,
    pub traversable_cloud: Option<&'a LabeledCloud>,
}

/// Half-open cell rectangle `[min_col, max_col) x [min_row, max_row)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellBounds {
    pub min_col: usize,
    pub min_row: usize,
    pub max_col: usize,
    pub max_row: usize,
}

impl CellBounds {
    pub fn full(grid: &CostGrid) -> Self {
        Self {
            min_col: 0,
            min_row: 0,
            max_col: grid.width(),
            max_row: grid.height(),
        }
    }

    pub fn contains(&self, c: CellIndex) -> bool {
        (self.min_col..self.max_col).contains(&c.col)
            && (self.min_row..self.max_row).contains(&c.row)
    }

    pub fn is_empty(&self) -> bool {
        self.min_col >= self.max_col || self.min_row >= self.max_row
    }

    /// Bounds covering a set of signed cells, clipped to the grid.
    pub(crate) fn around(
        grid: &CostGrid,
        cells: impl IntoIterator<Item = (i64, i64)>,
    ) -> Option<Self> {
        let mut lo = (i64::MAX, i64::MAX);
        let mut hi = (i64::MIN, i64::MIN);
        for (c, r) in cells {
            lo = (lo.0.min(c), lo.1.min(r));
            hi = (hi.0.max(c), hi.1.max(r));
        }
        if lo.0 > hi.0 {
            return None;
        }
        let clip = |v: i64, n: usize| v.clamp(0, n as i64) as usize;
        let b = Self {
            min_col: clip(lo.0, grid.width()),
            min_row: clip(lo.1, grid.height()),
            max_col: clip(hi.0 + 1, grid.width()),
            max_row: clip(hi.1 + 1, grid.height()),
        };
        (!b.is_empty()).then_some(b)
    }
}

/// What a layer did to the master grid this cycle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayerEffect {
    /// Row-major indices of cells that went from a cost above FREE to FREE.
    pub cleared: Vec<usize>,
}

/// A costmap layer. `bounds` is called before `update_costs`, and
/// `update_costs` must not touch master cells outside the returned bounds.
pub trait Layer: Send {
    fn name(&self) -> &str;
    fn kind(&self) -> LayerKind;
    fn enabled(&self) -> bool;
    fn set_enabled(&mut self, enabled: bool);

    /// Region of `master` this layer will write this cycle, or `None` for none.
    fn bounds(
        &mut self,
        master: &CostGrid,
        inputs: &LayerInputs<'_>,
    ) -> Result<Option<CellBounds>, LayerError>;

    fn update_costs(
        &mut self,
        master: &mut CostGrid,
        bounds: CellBounds,
        inputs: &LayerInputs<'_>,
    ) -> Result<LayerEffect, LayerError>;
}
