use serde::{Deserialize, Serialize};

use super::{CellBounds, Layer, LayerEffect, LayerError, LayerInputs, LayerKind};
use crate::grid::{CostGrid, FREE};
use crate::perception::{Frame, LabeledCloud, PointClass};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClearingConfig {
    /// Traversable points a cell needs before it is cleared.
    pub min_points: u32,
    /// Only traversable points with `z` in this band count, meters.
    pub z_band: [f64; 2],
    /// Cells within this many cells (Chebyshev) of an obstacle-class point
    /// are never cleared. Zero vetoes only the cell holding the point.
    pub obstacle_guard_cells: u32,
}

impl Default for ClearingConfig {
    fn default() -> Self {
        Self {
            min_points: 1,
            z_band: [-0.1, 1.0],
            obstacle_guard_cells: 1,
        }
    }
}

/// Sets cells covered by vision-classified traversable points to FREE,
/// overriding marks left by the earlier layers.
pub struct ClearingLayer {
    config: ClearingConfig,
    enabled: bool,
    counts: Vec<u32>,
    veto: Vec<bool>,
    touched: Vec<usize>,
    vetoed: Vec<usize>,
}

impl ClearingLayer {
    pub fn new(config: ClearingConfig) -> Result<Self, LayerError> {
        if config.min_points == 0 {
            return Err(LayerError::InvalidConfig {
                layer: "clearing",
                reason: "min_points must be >= 1".into(),
            });
        }
        if !(config.z_band[0] <= config.z_band[1]) {
            return Err(LayerError::InvalidConfig {
                layer: "clearing",
                reason: "z_band must be ordered".into(),
            });
        }
        Ok(Self {
            config,
            enabled: true,
            counts: Vec::new(),
            veto: Vec::new(),
            touched: Vec::new(),
            vetoed: Vec::new(),
        })
    }

    pub fn config(&self) -> &ClearingConfig {
        &self.config
    }

    /// Clears `master` from one cloud and returns how many cells went from a
    /// cost above FREE to FREE.
    pub fn clearing_update(
        &mut self,
        master: &mut CostGrid,
        cloud: &LabeledCloud,
    ) -> Result<usize, LayerError> {
        let inputs = LayerInputs {
            traversable_cloud: Some(cloud),
            ..Default::default()
        };
        match self.bounds(master, &inputs)? {
            Some(b) => Ok(self.update_costs(master, b, &inputs)?.cleared.len()),
            None => Ok(0),
        }
    }

    fn reset(&mut self, len: usize) {
        if self.counts.len() != len {
            self.counts = vec![0; len];
            self.veto = vec![false; len];
        } else {
            for &i in &self.touched {
                self.counts[i] = 0;
            }
            for &i in &self.vetoed {
                self.veto[i] = false;
            }
        }
        self.touched.clear();
        self.vetoed.clear();
    }

    fn accumulate(&mut self, master: &CostGrid, cloud: &LabeledCloud) {
        let [z_lo, z_hi] = self.config.z_band;
        let guard = i64::from(self.config.obstacle_guard_cells);
        for p in &cloud.points {
            let (c, r) = master.world_to_cell_signed(p.x, p.y);
            match p.class {
                PointClass::Traversable => {
                    if !(z_lo..=z_hi).contains(&p.z) {
                        continue;
                    }
                    if let Some(cell) = master.signed_to_cell(c, r) {
                        let i = master.index(cell);
                        if self.counts[i] == 0 {
                            self.touched.push(i);
                        }
                        self.counts[i] += 1;
                    }
                }
                PointClass::Obstacle => {
                    for dr in -guard..=guard {
                        for dc in -guard..=guard {
                            if let Some(cell) = master.signed_to_cell(c + dc, r + dr) {
                                let i = master.index(cell);
                                if !self.veto[i] {
                                    self.veto[i] = true;
                                    self.vetoed.push(i);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

impl Layer for ClearingLayer {
    fn name(&self) -> &str {
        "clearing"
    }

    fn kind(&self) -> LayerKind {
        LayerKind::Clearing
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
        self.reset(master.len());
        let Some(cloud) = inputs.traversable_cloud else {
            return Ok(None);
        };
        if cloud.frame != Frame::World {
            return Err(LayerError::WrongFrame);
        }
        self.accumulate(master, cloud);
        let w = master.width() as i64;
        Ok(CellBounds::around(
            master,
            self.touched.iter().map(|&i| (i as i64 % w, i as i64 / w)),
        ))
    }

    fn update_costs(
        &mut self,
        master: &mut CostGrid,
        _bounds: CellBounds,
        _inputs: &LayerInputs<'_>,
    ) -> Result<LayerEffect, LayerError> {
        let mut cleared = Vec::new();
        let cells = master.cells_mut();
        for &i in &self.touched {
            if self.counts[i] >= self.config.min_points && !self.veto[i] && cells[i] > FREE {
                cells[i] = FREE;
                cleared.push(i);
            }
        }
        cleared.sort_unstable();
        Ok(LayerEffect { cleared })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CellIndex, Point2, INSCRIBED, LETHAL, UNKNOWN};
    use crate::perception::LabeledPoint;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64, z: f64, class: PointClass) -> LabeledPoint {
        LabeledPoint { x, y, z, class }
    }

    fn cloud(points: Vec<LabeledPoint>) -> LabeledCloud {
        LabeledCloud {
            stamp: 0.0,
            frame: Frame::World,
            points,
        }
    }

    fn master() -> CostGrid {
        CostGrid::new(10, 10, 0.1, Point2::new(0.0, 0.0), LETHAL).unwrap()
    }

    fn exact() -> ClearingLayer {
        ClearingLayer::new(ClearingConfig {
            obstacle_guard_cells: 0,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn lethal_cell_with_traversable_points_is_cleared() {
        let mut m = master();
        let c = cloud(
            (0..3)
                .map(|i| {
                    pt(
                        0.31 + 0.01 * f64::from(i),
                        0.45,
                        0.2,
                        PointClass::Traversable,
                    )
                })
                .collect(),
        );
        assert_eq!(exact().clearing_update(&mut m, &c).unwrap(), 1);
        assert_eq!(m.get(CellIndex::new(3, 4)), Some(FREE));
        assert_eq!(m.cells().iter().filter(|&&v| v == FREE).count(), 1);
    }

    #[test]
    fn cell_without_points_is_unchanged() {
        let mut m = master();
        assert_eq!(exact().clearing_update(&mut m, &cloud(vec![])).unwrap(), 0);
        assert!(m.cells().iter().all(|&v| v == LETHAL));
    }

    #[test]
    fn obstacle_point_vetoes_clearing() {
        let mut m = master();
        let mut pts: Vec<_> = (0..5)
            .map(|_| pt(0.35, 0.45, 0.2, PointClass::Traversable))
            .collect();
        pts.push(pt(0.36, 0.46, 0.5, PointClass::Obstacle));
        assert_eq!(exact().clearing_update(&mut m, &cloud(pts)).unwrap(), 0);
        assert_eq!(m.get(CellIndex::new(3, 4)), Some(LETHAL));
    }

    #[test]
    fn guard_radius_extends_veto_to_neighbours() {
        let mut m = master();
        let pts = vec![
            pt(0.35, 0.45, 0.2, PointClass::Traversable),
            pt(0.45, 0.55, 0.5, PointClass::Obstacle),
            pt(0.75, 0.45, 0.2, PointClass::Traversable),
        ];
        let mut layer = ClearingLayer::new(ClearingConfig::default()).unwrap();
        assert_eq!(layer.clearing_update(&mut m, &cloud(pts)).unwrap(), 1);
        assert_eq!(m.get(CellIndex::new(3, 4)), Some(LETHAL));
        assert_eq!(m.get(CellIndex::new(7, 4)), Some(FREE));
    }

    #[test]
    fn z_band_and_min_points() {
        let mut m = master();
        let mut layer = ClearingLayer::new(ClearingConfig {
            min_points: 2,
            obstacle_guard_cells: 0,
            ..Default::default()
        })
        .unwrap();
        let pts = vec![
            pt(0.15, 0.15, 0.2, PointClass::Traversable),
            pt(0.55, 0.55, 0.2, PointClass::Traversable),
            pt(0.55, 0.55, 1.5, PointClass::Traversable),
            pt(0.85, 0.85, 0.1, PointClass::Traversable),
            pt(0.85, 0.85, 0.3, PointClass::Traversable),
        ];
        assert_eq!(layer.clearing_update(&mut m, &cloud(pts)).unwrap(), 1);
        assert_eq!(m.get(CellIndex::new(8, 8)), Some(FREE));
    }

    #[test]
    fn counts_only_cells_above_free() {
        let mut m = master();
        m.set(CellIndex::new(0, 0), FREE).unwrap();
        m.set(CellIndex::new(1, 0), UNKNOWN).unwrap();
        m.set(CellIndex::new(2, 0), INSCRIBED).unwrap();
        let pts = (0..3)
            .map(|i| {
                pt(
                    0.05 + 0.1 * f64::from(i),
                    0.05,
                    0.0,
                    PointClass::Traversable,
                )
            })
            .collect();
        assert_eq!(exact().clearing_update(&mut m, &cloud(pts)).unwrap(), 2);
    }

    #[test]
    fn counters_reset_each_cycle() {
        let mut layer = ClearingLayer::new(ClearingConfig {
            min_points: 2,
            obstacle_guard_cells: 0,
            ..Default::default()
        })
        .unwrap();
        let one = cloud(vec![pt(0.55, 0.55, 0.2, PointClass::Traversable)]);
        let mut m = master();
        assert_eq!(layer.clearing_update(&mut m, &one).unwrap(), 0);
        assert_eq!(layer.clearing_update(&mut m, &one).unwrap(), 0);
    }

    proptest! {
        #[test]
        fn adding_traversable_points_never_raises_cost(
            base in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, any::<bool>()), 0..40),
            extra in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 0..40),
            seed_cells in proptest::collection::vec(0u8..=255, 100),
        ) {
            let grid = CostGrid::from_cells(10, 10, 0.1, Point2::new(0.0, 0.0), seed_cells).unwrap();
            let to_pts = |v: &[(f64, f64, bool)]| -> Vec<LabeledPoint> {
                v.iter().map(|&(x, y, obs)| pt(x, y, 0.2, if obs { PointClass::Obstacle } else { PointClass::Traversable })).collect()
            };
            let base_pts = to_pts(&base);
            let mut more = base_pts.clone();
            more.extend(extra.iter().map(|&(x, y)| pt(x, y, 0.2, PointClass::Traversable)));

            let mut a = grid.clone();
            ClearingLayer::new(ClearingConfig::default()).unwrap().clearing_update(&mut a, &cloud(base_pts)).unwrap();
            let mut b = grid.clone();
            ClearingLayer::new(ClearingConfig::default()).unwrap().clearing_update(&mut b, &cloud(more)).unwrap();
            for (x, y) in a.cells().iter().zip(b.cells()) {
                prop_assert!(y <= x);
            }
        }
    }
}
