//! 2D cost grids, cost-byte semantics and the robot-centred rolling window.
//!
//! Cells are stored row-major with row 0 at minimum `y`. Grids are always
//! axis-aligned; the robot heading only matters to the sensors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Cost byte of a cell known to be open.
pub const FREE: u8 = 0;
/// Highest cost produced by exponential inflation decay.
pub const MAX_INFLATED: u8 = 252;
/// Cell within the inscribed radius of an obstacle.
pub const INSCRIBED: u8 = 253;
/// Cell containing an obstacle.
pub const LETHAL: u8 = 254;
/// Cell with no information this cycle.
pub const UNKNOWN: u8 = 255;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("point ({x:.3}, {y:.3}) is outside the grid")]
    OutOfBounds { x: f64, y: f64 },
    #[error("cell ({col}, {row}) is outside a {width}x{height} grid")]
    CellOutOfBounds {
        col: usize,
        row: usize,
        width: usize,
        height: usize,
    },
    #[error("invalid grid geometry: {0}")]
    InvalidGeometry(String),
    #[error("cell buffer has {actual} values, expected {expected}")]
    BadLength { expected: usize, actual: usize },
}

/// Normalizes an angle to `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Planar pose; `theta` is kept in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub col: usize,
    pub row: usize,
}

impl CellIndex {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }
}

/// Row-major byte grid with world-frame geometry.
///
/// `origin` is the world position of the outer corner of cell (0, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct CostGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Point2,
    cells: Vec<u8>,
}

impl CostGrid {
    /// Creates a grid filled with `fill`.
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Point2,
        fill: u8,
    ) -> Result<Self, GridError> {
        Self::from_cells(
            width,
            height,
            resolution,
            origin,
            vec![fill; width * height],
        )
    }

    pub fn from_cells(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Point2,
        cells: Vec<u8>,
    ) -> Result<Self, GridError> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(GridError::InvalidGeometry(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if !(origin.x.is_finite() && origin.y.is_finite()) {
            return Err(GridError::InvalidGeometry("non-finite origin".into()));
        }
        if cells.len() != width * height {
            return Err(GridError::BadLength {
                expected: width * height,
                actual: cells.len(),
            });
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin,
            cells,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [u8] {
        &mut self.cells
    }

    pub fn into_cells(self) -> Vec<u8> {
        self.cells
    }

    pub fn fill(&mut self, value: u8) {
        self.cells.fill(value);
    }

    pub fn contains(&self, c: CellIndex) -> bool {
        c.col < self.width && c.row < self.height
    }

    pub fn index(&self, c: CellIndex) -> usize {
        c.row * self.width + c.col
    }

    pub fn cell_at(&self, index: usize) -> CellIndex {
        CellIndex::new(index % self.width, index / self.width)
    }

    pub fn get(&self, c: CellIndex) -> Option<u8> {
        self.contains(c).then(|| self.cells[self.index(c)])
    }

    pub fn set(&mut self, c: CellIndex, value: u8) -> Result<(), GridError> {
        if !self.contains(c) {
            return Err(self.cell_error(c));
        }
        let i = self.index(c);
        self.cells[i] = value;
        Ok(())
    }

    /// Signed cell coordinates of a world point; may lie outside the grid.
    pub fn world_to_cell_signed(&self, x: f64, y: f64) -> (i64, i64) {
        (
            ((x - self.origin.x) / self.resolution).floor() as i64,
            ((y - self.origin.y) / self.resolution).floor() as i64,
        )
    }

    pub fn signed_to_cell(&self, col: i64, row: i64) -> Option<CellIndex> {
        (col >= 0 && row >= 0 && (col as usize) < self.width && (row as usize) < self.height)
            .then(|| CellIndex::new(col as usize, row as usize))
    }

    pub fn world_to_cell(&self, p: Point2) -> Result<CellIndex, GridError> {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return Err(GridError::OutOfBounds { x: p.x, y: p.y });
        }
        let (col, row) = self.world_to_cell_signed(p.x, p.y);
        self.signed_to_cell(col, row)
            .ok_or(GridError::OutOfBounds { x: p.x, y: p.y })
    }

    /// World coordinates of a cell centre.
    pub fn cell_to_world(&self, c: CellIndex) -> Result<Point2, GridError> {
        if !self.contains(c) {
            return Err(self.cell_error(c));
        }
        Ok(self.cell_center(c))
    }

    pub(crate) fn cell_center(&self, c: CellIndex) -> Point2 {
        Point2::new(
            self.origin.x + (c.col as f64 + 0.5) * self.resolution,
            self.origin.y + (c.row as f64 + 0.5) * self.resolution,
        )
    }

    /// Width and height in meters.
    pub fn extent(&self) -> (f64, f64) {
        (
            self.width as f64 * self.resolution,
            self.height as f64 * self.resolution,
        )
    }

    /// Same geometry, every cell set to `fill`.
    pub fn blank_like(&self, fill: u8) -> Self {
        Self {
            width: self.width,
            height: self.height,
            resolution: self.resolution,
            origin: self.origin,
            cells: vec![fill; self.cells.len()],
        }
    }

    pub fn same_geometry(&self, other: &CostGrid) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.resolution == other.resolution
            && self.origin == other.origin
    }

    fn cell_error(&self, c: CellIndex) -> GridError {
        GridError::CellOutOfBounds {
            col: c.col,
            row: c.row,
            width: self.width,
            height: self.height,
        }
    }
}

/// Robot-centred local window whose origin stays on the resolution lattice.
///
/// The window origin is tracked as an integer cell offset from the world
/// origin so that rolling never introduces sub-cell drift.
#[derive(Debug, Clone, PartialEq)]
pub struct RollingWindow {
    grid: CostGrid,
    center: Pose2D,
    origin_cell: (i64, i64),
}

impl RollingWindow {
    /// A window of `width` x `height` cells centred on `center`, all UNKNOWN.
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        center: Pose2D,
    ) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::InvalidGeometry(
                "window must be non-empty".into(),
            ));
        }
        let origin_cell = Self::lattice_origin(width, height, resolution, &center);
        let grid = CostGrid::new(
            width,
            height,
            resolution,
            Self::origin_point(origin_cell, resolution),
            UNKNOWN,
        )?;
        Ok(Self {
            grid,
            center,
            origin_cell,
        })
    }

    /// Window sized in meters (rounded to whole cells).
    pub fn with_extent(
        width_m: f64,
        height_m: f64,
        resolution: f64,
        center: Pose2D,
    ) -> Result<Self, GridError> {
        if !(resolution > 0.0) {
            return Err(GridError::InvalidGeometry(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        let w = (width_m / resolution).round();
        let h = (height_m / resolution).round();
        if !(w >= 1.0 && h >= 1.0) {
            return Err(GridError::InvalidGeometry(format!(
                "window extent {width_m}x{height_m} m is smaller than one cell"
            )));
        }
        Self::new(w as usize, h as usize, resolution, center)
    }

    fn lattice_origin(width: usize, height: usize, resolution: f64, center: &Pose2D) -> (i64, i64) {
        let cx = (center.x / resolution).floor() as i64;
        let cy = (center.y / resolution).floor() as i64;
        (cx - (width / 2) as i64, cy - (height / 2) as i64)
    }

    fn origin_point(origin_cell: (i64, i64), resolution: f64) -> Point2 {
        Point2::new(
            origin_cell.0 as f64 * resolution,
            origin_cell.1 as f64 * resolution,
        )
    }

    pub fn grid(&self) -> &CostGrid {
        &self.grid
    }

    pub fn grid_mut(&mut self) -> &mut CostGrid {
        &mut self.grid
    }

    pub fn center(&self) -> Pose2D {
        self.center
    }

    /// Cell offset of the window origin from the world origin.
    pub fn origin_cell(&self) -> (i64, i64) {
        self.origin_cell
    }

    /// Re-centres the window on `new_center`. Cells still covered keep their
    /// values; newly exposed cells become UNKNOWN.
    pub fn roll(&mut self, new_center: Pose2D) {
        let (w, h) = (self.grid.width, self.grid.height);
        let res = self.grid.resolution;
        let new_origin = Self::lattice_origin(w, h, res, &new_center);
        self.center = new_center;
        let dx = new_origin.0 - self.origin_cell.0;
        let dy = new_origin.1 - self.origin_cell.1;
        if dx == 0 && dy == 0 {
            return;
        }
        let mut cells = vec![UNKNOWN; w * h];
        if dx.unsigned_abs() < w as u64 && dy.unsigned_abs() < h as u64 {
            for row in 0..h as i64 {
                let old_row = row + dy;
                if old_row < 0 || old_row >= h as i64 {
                    continue;
                }
                let col_lo = 0.max(-dx);
                let col_hi = (w as i64).min(w as i64 - dx);
                if col_lo >= col_hi {
                    continue;
                }
                let dst = (row as usize) * w;
                let src = (old_row as usize) * w;
                let (lo, hi) = (col_lo as usize, col_hi as usize);
                let shift_lo = (col_lo + dx) as usize;
                cells[dst + lo..dst + hi]
                    .copy_from_slice(&self.grid.cells[src + shift_lo..src + shift_lo + (hi - lo)]);
            }
        }
        self.origin_cell = new_origin;
        self.grid.origin = Self::origin_point(new_origin, res);
        self.grid.cells = cells;
    }
}

/// Functional form of [`RollingWindow::roll`].
pub fn roll_window(mut w: RollingWindow, new_center: Pose2D) -> RollingWindow {
    w.roll(new_center);
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid100() -> CostGrid {
        CostGrid::new(100, 100, 0.05, Point2::new(0.0, 0.0), FREE).unwrap()
    }

    #[test]
    fn world_to_cell_examples() {
        let g = grid100();
        assert_eq!(
            g.world_to_cell(Point2::new(0.0, 0.0)).unwrap(),
            CellIndex::new(0, 0)
        );
        assert_eq!(
            g.world_to_cell(Point2::new(1.0, 0.5)).unwrap(),
            CellIndex::new(20, 10)
        );
        assert!(matches!(
            g.world_to_cell(Point2::new(-0.01, 0.0)),
            Err(GridError::OutOfBounds { .. })
        ));
        assert!(g.world_to_cell(Point2::new(5.0, 0.0)).is_err());
    }

    #[test]
    fn cell_to_world_examples() {
        let g = grid100();
        let p = g.cell_to_world(CellIndex::new(0, 0)).unwrap();
        assert!((p.x - 0.025).abs() < 1e-12 && (p.y - 0.025).abs() < 1e-12);
        let p = g.cell_to_world(CellIndex::new(20, 10)).unwrap();
        assert!((p.x - 1.025).abs() < 1e-12 && (p.y - 0.525).abs() < 1e-12);
        assert!(g.cell_to_world(CellIndex::new(100, 0)).is_err());
    }

    #[test]
    fn round_trip_every_cell() {
        let g = CostGrid::new(37, 23, 0.05, Point2::new(-3.3, 7.15), FREE).unwrap();
        for row in 0..g.height() {
            for col in 0..g.width() {
                let c = CellIndex::new(col, row);
                assert_eq!(g.world_to_cell(g.cell_to_world(c).unwrap()).unwrap(), c);
            }
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(CostGrid::new(2, 2, 0.0, Point2::default(), FREE).is_err());
        assert!(CostGrid::from_cells(2, 2, 0.1, Point2::default(), vec![0; 3]).is_err());
    }

    #[test]
    fn angles_normalize_into_half_open_interval() {
        assert_eq!(normalize_angle(PI), PI);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(Pose2D::new(0.0, 0.0, 0.0).theta, 0.0);
    }

    fn patterned_window() -> RollingWindow {
        let mut w = RollingWindow::new(8, 6, 0.5, Pose2D::new(2.0, 1.5, 0.0)).unwrap();
        for (i, v) in w.grid_mut().cells_mut().iter_mut().enumerate() {
            *v = (i % 250) as u8;
        }
        w
    }

    #[test]
    fn roll_identity() {
        let w = patterned_window();
        let same = roll_window(w.clone(), w.center());
        assert_eq!(same.grid(), w.grid());
    }

    #[test]
    fn roll_one_cell_east() {
        let w = patterned_window();
        let c = w.center();
        let rolled = roll_window(w.clone(), Pose2D::new(c.x + 0.5, c.y, 0.0));
        let (gw, gh) = (w.grid().width(), w.grid().height());
        for row in 0..gh {
            for col in 0..gw - 1 {
                assert_eq!(
                    rolled.grid().get(CellIndex::new(col, row)),
                    w.grid().get(CellIndex::new(col + 1, row))
                );
            }
            assert_eq!(
                rolled.grid().get(CellIndex::new(gw - 1, row)),
                Some(UNKNOWN)
            );
        }
        assert!((rolled.grid().origin().x - w.grid().origin().x - 0.5).abs() < 1e-12);
    }

    #[test]
    fn roll_beyond_extent_is_all_unknown() {
        let w = patterned_window();
        let rolled = roll_window(w, Pose2D::new(100.0, -40.0, 0.0));
        assert!(rolled.grid().cells().iter().all(|&v| v == UNKNOWN));
    }

    proptest! {
        #[test]
        fn roll_preserves_overlap(dx in -12i64..12, dy in -9i64..9, sub_x in 0.0f64..0.49, sub_y in 0.0f64..0.49) {
            let w = patterned_window();
            let res = w.grid().resolution();
            let (ox, oy) = w.origin_cell();
            let c = w.center();
            // Keep the centre inside the same sub-cell phase so the shift is exactly (dx, dy).
            let base_x = (c.x / res).floor() * res;
            let base_y = (c.y / res).floor() * res;
            let target = Pose2D::new(base_x + dx as f64 * res + sub_x, base_y + dy as f64 * res + sub_y, 0.0);
            let rolled = roll_window(w.clone(), target);
            let (nx, ny) = rolled.origin_cell();
            prop_assert_eq!((nx - ox, ny - oy), (dx, dy));
            // Origin on lattice.
            let o = rolled.grid().origin();
            prop_assert!((o.x / res - (o.x / res).round()).abs() < 1e-9);
            prop_assert!((o.y / res - (o.y / res).round()).abs() < 1e-9);
            // Brute-force comparison in world cell coordinates.
            let (gw, gh) = (w.grid().width() as i64, w.grid().height() as i64);
            for row in 0..gh {
                for col in 0..gw {
                    let world = (nx + col, ny + row);
                    let old = (world.0 - ox, world.1 - oy);
                    let expect = if old.0 >= 0 && old.0 < gw && old.1 >= 0 && old.1 < gh {
                        w.grid().get(CellIndex::new(old.0 as usize, old.1 as usize)).unwrap()
                    } else {
                        UNKNOWN
                    };
                    prop_assert_eq!(rolled.grid().get(CellIndex::new(col as usize, row as usize)).unwrap(), expect);
                }
            }
        }
    }
}
