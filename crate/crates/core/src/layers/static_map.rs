use super::{CellBounds, Layer, LayerEffect, LayerError, LayerInputs, LayerKind};
use crate::grid::{CostGrid, UNKNOWN};

/// Copies a fixed reference map of known obstacles into the master window.
///
/// The reference grid must share the master's resolution and lattice. Cells of
/// the window outside the reference map are left untouched.
pub struct StaticLayer {
    reference: CostGrid,
    enabled: bool,
}

impl StaticLayer {
    pub fn new(reference: CostGrid) -> Self {
        Self {
            reference,
            enabled: true,
        }
    }

    pub fn reference(&self) -> &CostGrid {
        &self.reference
    }

    /// Integer cell offset of the master origin within the reference grid.
    fn offset(&self, master: &CostGrid) -> Result<(i64, i64), LayerError> {
        let res = master.resolution();
        if (res - self.reference.resolution()).abs() > 1e-12 {
            return Err(LayerError::InvalidConfig {
                layer: "static",
                reason: format!(
                    "reference resolution {} differs from master {}",
                    self.reference.resolution(),
                    res
                ),
            });
        }
        let fx = (master.origin().x - self.reference.origin().x) / res;
        let fy = (master.origin().y - self.reference.origin().y) / res;
        let (ox, oy) = (fx.round(), fy.round());
        if (fx - ox).abs() > 1e-6 || (fy - oy).abs() > 1e-6 {
            return Err(LayerError::InvalidConfig {
                layer: "static",
                reason: "reference map is not on the master lattice".into(),
            });
        }
        Ok((ox as i64, oy as i64))
    }
}

impl Layer for StaticLayer {
    fn name(&self) -> &str {
        "static"
    }

    fn kind(&self) -> LayerKind {
        LayerKind::Static
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
        _inputs: &LayerInputs<'_>,
    ) -> Result<Option<CellBounds>, LayerError> {
        let (ox, oy) = self.offset(master)?;
        let (rw, rh) = (
            self.reference.width() as i64,
            self.reference.height() as i64,
        );
        // Reference extent expressed in master cells.
        Ok(CellBounds::around(
            master,
            [(-ox, -oy), (rw - 1 - ox, rh - 1 - oy)],
        ))
    }

    fn update_costs(
        &mut self,
        master: &mut CostGrid,
        bounds: CellBounds,
        _inputs: &LayerInputs<'_>,
    ) -> Result<LayerEffect, LayerError> {
        let (ox, oy) = self.offset(master)?;
        let (mw, rw) = (master.width(), self.reference.width());
        let reference = self.reference.cells();
        let cells = master.cells_mut();
        for row in bounds.min_row..bounds.max_row {
            let rrow = (row as i64 + oy) as usize;
            for col in bounds.min_col..bounds.max_col {
                let rcol = (col as i64 + ox) as usize;
                let v = reference[rrow * rw + rcol];
                if v != UNKNOWN {
                    cells[row * mw + col] = v;
                }
            }
        }
        Ok(LayerEffect::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CellIndex, Point2, FREE, LETHAL};

    #[test]
    fn copies_overlap_with_offset() {
        let mut reference = CostGrid::new(10, 10, 0.5, Point2::new(0.0, 0.0), FREE).unwrap();
        reference.set(CellIndex::new(6, 7), LETHAL).unwrap();
        let mut layer = StaticLayer::new(reference);
        let mut master = CostGrid::new(4, 4, 0.5, Point2::new(2.5, 3.0), UNKNOWN).unwrap();
        let inputs = LayerInputs::default();
        let b = layer.bounds(&master, &inputs).unwrap().unwrap();
        layer.update_costs(&mut master, b, &inputs).unwrap();
        // reference (6,7) -> master (1,1)
        assert_eq!(master.get(CellIndex::new(1, 1)), Some(LETHAL));
        assert_eq!(master.get(CellIndex::new(0, 0)), Some(FREE));

        let mut edge = CostGrid::new(4, 4, 0.5, Point2::new(4.0, 4.0), UNKNOWN).unwrap();
        let b = layer.bounds(&edge, &inputs).unwrap().unwrap();
        assert_eq!((b.max_col, b.max_row), (2, 2));
        layer.update_costs(&mut edge, b, &inputs).unwrap();
        assert_eq!(edge.get(CellIndex::new(3, 3)), Some(UNKNOWN));
    }

    #[test]
    fn rejects_off_lattice_reference() {
        let reference = CostGrid::new(10, 10, 0.5, Point2::new(0.1, 0.0), FREE).unwrap();
        let mut layer = StaticLayer::new(reference);
        let master = CostGrid::new(4, 4, 0.5, Point2::new(2.5, 3.0), UNKNOWN).unwrap();
        assert!(layer.bounds(&master, &LayerInputs::default()).is_err());
    }
}
