use serde::{Deserialize, Serialize};

use super::{
    CellBounds, ClearingConfig, ClearingLayer, InflationConfig, InflationLayer, Layer, LayerError,
    LayerInputs, LayerKind, ObstacleConfig, ObstacleLayer, StaticLayer, VoxelConfig, VoxelLayer,
};
use crate::grid::{CellIndex, CostGrid, Pose2D, RollingWindow, UNKNOWN};

/// Parameters of the standard five-layer stack.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StackConfig {
    pub obstacle: ObstacleConfig,
    pub voxel: VoxelConfig,
    pub clearing: ClearingConfig,
    pub inflation: InflationConfig,
}

/// Ordered costmap layers writing into a rolling master window.
pub struct LayerStack {
    window: RollingWindow,
    layers: Vec<Box<dyn Layer>>,
    last_cleared: Vec<usize>,
    verify_bounds: bool,
}

impl LayerStack {
    /// Builds a stack; layer kinds must appear in strictly increasing
    /// static < obstacle < voxel < clearing < inflation order.
    pub fn new(window: RollingWindow, layers: Vec<Box<dyn Layer>>) -> Result<Self, LayerError> {
        for pair in layers.windows(2) {
            if pair[0].kind() >= pair[1].kind() {
                return Err(LayerError::Ordering(format!(
                    "{} may not precede {}",
                    pair[0].name(),
                    pair[1].name()
                )));
            }
        }
        Ok(Self {
            window,
            layers,
            last_cleared: Vec::new(),
            verify_bounds: false,
        })
    }

    /// Static (if a reference map is given), obstacle, voxel, clearing and
    /// inflation layers in that order.
    pub fn standard(
        window: RollingWindow,
        reference: Option<CostGrid>,
        config: &StackConfig,
    ) -> Result<Self, LayerError> {
        let mut layers: Vec<Box<dyn Layer>> = Vec::with_capacity(5);
        if let Some(r) = reference {
            layers.push(Box::new(StaticLayer::new(r)));
        }
        layers.push(Box::new(ObstacleLayer::new(config.obstacle)?));
        layers.push(Box::new(VoxelLayer::new(config.voxel)?));
        layers.push(Box::new(ClearingLayer::new(config.clearing)?));
        layers.push(Box::new(InflationLayer::new(config.inflation)?));
        Self::new(window, layers)
    }

    /// When set, every layer write is checked against the bounds the layer
    /// declared; a violation panics. Meant for tests.
    pub fn set_verify_bounds(&mut self, on: bool) {
        self.verify_bounds = on;
    }

    pub fn master(&self) -> &CostGrid {
        self.window.grid()
    }

    pub fn window(&self) -> &RollingWindow {
        &self.window
    }

    pub fn layer_names(&self) -> Vec<&str> {
        self.layers.iter().map(|l| l.name()).collect()
    }

    pub fn layer(&self, kind: LayerKind) -> Option<&dyn Layer> {
        self.layers
            .iter()
            .find(|l| l.kind() == kind)
            .map(|l| l.as_ref())
    }

    /// Enables or disables the layer of `kind`; returns false if absent.
    pub fn set_enabled(&mut self, kind: LayerKind, enabled: bool) -> bool {
        match self.layers.iter_mut().find(|l| l.kind() == kind) {
            Some(l) => {
                l.set_enabled(enabled);
                true
            }
            None => false,
        }
    }

    /// Row-major indices cleared by the clearing layer during the last update.
    pub fn last_cleared(&self) -> &[usize] {
        &self.last_cleared
    }

    pub fn last_cleared_cells(&self) -> Vec<CellIndex> {
        let g = self.window.grid();
        self.last_cleared.iter().map(|&i| g.cell_at(i)).collect()
    }

    /// Runs one costmap cycle and returns a snapshot of the master grid.
    pub fn update(
        &mut self,
        robot: Pose2D,
        inputs: &LayerInputs<'_>,
    ) -> Result<CostGrid, LayerError> {
        self.window.roll(robot);
        self.window.grid_mut().fill(UNKNOWN);
        self.last_cleared.clear();
        for layer in self.layers.iter_mut().filter(|l| l.enabled()) {
            let master = self.window.grid_mut();
            let Some(bounds) = layer.bounds(master, inputs)? else {
                continue;
            };
            let before = self.verify_bounds.then(|| master.clone());
            let effect = layer.update_costs(master, bounds, inputs)?;
            if let Some(before) = before {
                check_bounds(layer.name(), &before, master, bounds);
            }
            self.last_cleared.extend(effect.cleared);
        }
        self.last_cleared.sort_unstable();
        self.last_cleared.dedup();
        Ok(self.window.grid().clone())
    }
}

fn check_bounds(name: &str, before: &CostGrid, after: &CostGrid, bounds: CellBounds) {
    for (i, (a, b)) in before.cells().iter().zip(after.cells()).enumerate() {
        let c = before.cell_at(i);
        assert!(
            a == b || bounds.contains(c),
            "layer {name} wrote cell ({}, {}) outside its bounds {bounds:?}",
            c.col,
            c.row
        );
    }
}

/// Functional form of [`LayerStack::update`].
pub fn stack_update(
    stack: &mut LayerStack,
    robot: Pose2D,
    inputs: &LayerInputs<'_>,
) -> Result<CostGrid, LayerError> {
    stack.update(robot, inputs)
}
