use serde::{Deserialize, Serialize};

use super::{CellBounds, Layer, LayerEffect, LayerError, LayerInputs, LayerKind};
use crate::grid::{CostGrid, LETHAL};
use crate::perception::{Frame, LabeledCloud, PointClass};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VoxelConfig {
    /// Height of the bottom of voxel 0, meters.
    pub z_origin: f64,
    pub z_resolution: f64,
    /// Voxels per column, at most 16.
    pub z_voxels: u32,
    /// Occupied voxels needed before a column is marked lethal.
    pub mark_threshold: u32,
}

impl Default for VoxelConfig {
    fn default() -> Self {
        Self {
            z_origin: 0.1,
            z_resolution: 0.1,
            z_voxels: 16,
            mark_threshold: 1,
        }
    }
}

/// Column-bitmask voxel grid projected onto the 2D master.
pub struct VoxelLayer {
    config: VoxelConfig,
    enabled: bool,
    columns: Vec<u16>,
    touched: Vec<usize>,
}

impl VoxelLayer {
    pub fn new(config: VoxelConfig) -> Result<Self, LayerError> {
        let bad = |reason: &str| LayerError::InvalidConfig {
            layer: "voxel",
            reason: reason.into(),
        };
        if !(1..=16).contains(&config.z_voxels) {
            return Err(bad("z_voxels must be in 1..=16"));
        }
        if !(config.z_resolution > 0.0) || !config.z_origin.is_finite() {
            return Err(bad("z_resolution must be positive"));
        }
        if config.mark_threshold == 0 {
            return Err(bad("mark_threshold must be >= 1"));
        }
        Ok(Self {
            config,
            enabled: true,
            columns: Vec::new(),
            touched: Vec::new(),
        })
    }

    pub fn config(&self) -> &VoxelConfig {
        &self.config
    }

    /// Occupancy bits of one column after the last update.
    pub fn column(&self, index: usize) -> u16 {
        self.columns.get(index).copied().unwrap_or(0)
    }

    pub fn voxel_update(
        &mut self,
        master: &mut CostGrid,
        cloud: &LabeledCloud,
    ) -> Result<(), LayerError> {
        let inputs = LayerInputs {
            obstacle_cloud: Some(cloud),
            ..Default::default()
        };
        if let Some(b) = self.bounds(master, &inputs)? {
            self.update_costs(master, b, &inputs)?;
        }
        Ok(())
    }

    fn voxel_of(&self, z: f64) -> Option<u32> {
        let k = ((z - self.config.z_origin) / self.config.z_resolution).floor();
        (k >= 0.0 && k < f64::from(self.config.z_voxels)).then_some(k as u32)
    }
}

impl Layer for VoxelLayer {
    fn name(&self) -> &str {
        "voxel"
    }

    fn kind(&self) -> LayerKind {
        LayerKind::Voxel
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
        // Per-cycle recomputation: the columns only ever hold this cycle's points.
        for &i in &self.touched {
            self.columns[i] = 0;
        }
        self.touched.clear();
        if self.columns.len() != master.len() {
            self.columns = vec![0; master.len()];
        }
        let Some(cloud) = inputs.obstacle_cloud else {
            return Ok(None);
        };
        if cloud.frame != Frame::World {
            return Err(LayerError::WrongFrame);
        }
        for p in cloud
            .points
            .iter()
            .filter(|p| p.class == PointClass::Obstacle)
        {
            let Some(k) = self.voxel_of(p.z) else {
                continue;
            };
            let (c, r) = master.world_to_cell_signed(p.x, p.y);
            let Some(cell) = master.signed_to_cell(c, r) else {
                continue;
            };
            let i = master.index(cell);
            if self.columns[i] == 0 {
                self.touched.push(i);
            }
            self.columns[i] |= 1 << k;
        }
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
        let cells = master.cells_mut();
        for &i in &self.touched {
            if self.columns[i].count_ones() >= self.config.mark_threshold {
                cells[i] = LETHAL;
            }
        }
        Ok(LayerEffect::default())
    }
}
