//! Shared fixtures for the pipeline benchmarks.
//!
//! [`Fixture`] captures one sensor frame of the grass-corridor scenario at
//! its start pose so each stage can be timed in isolation.

use grassnav_core::layers::LayerInputs;
use grassnav_core::simworld::{lidar_scan, rasterize_static, render_view, SensorNoise};
use grassnav_core::{
    depth_to_cloud, mask_depth, plan_toward, transform_cloud, CostGrid, DepthImage, LabeledCloud,
    LayerStack, Path, PointClass, RangeScan, RollingWindow, Scenario, SegClass, SegMask,
};

pub const GRASS_CORRIDOR: &str = include_str!("../../../scenarios/grass_corridor.json");

pub fn corridor_scenario() -> Scenario {
    serde_json::from_str(GRASS_CORRIDOR).expect("bundled scenario parses")
}

pub struct Fixture {
    pub scenario: Scenario,
    pub stack: LayerStack,
    pub scan: RangeScan,
    pub depth: DepthImage,
    pub mask: SegMask,
}

impl Fixture {
    pub fn corridor() -> Self {
        let s = corridor_scenario();
        let res = s.costmap.resolution;
        let window =
            RollingWindow::with_extent(s.costmap.width_m, s.costmap.height_m, res, s.start)
                .unwrap();
        let reference = rasterize_static(&s.world, res).unwrap();
        let stack = LayerStack::standard(window, Some(reference), &s.layers).unwrap();
        let noise = SensorNoise {
            range_sigma: s.noise.range_sigma,
            depth_sigma_rel: s.noise.depth_sigma_rel,
            seed: s.seed,
        };
        let scan = lidar_scan(&s.world, s.start, &s.lidar, &noise, 0.0).unwrap();
        let (depth, mask) = render_view(&s.world, s.start, &s.camera, &noise, 0.0, s.camera.stride);
        Self {
            scenario: s,
            stack,
            scan,
            depth,
            mask,
        }
    }

    /// Raw and semantic world-frame clouds: mask, project, transform.
    pub fn clouds(&self) -> (LabeledCloud, LabeledCloud) {
        let s = &self.scenario;
        let (k, stride) = (&s.camera.intrinsics, s.camera.stride);
        let trav = mask_depth(&self.depth, &self.mask, SegClass::Traversable).unwrap();
        let obst = mask_depth(&self.depth, &self.mask, SegClass::Obstacle).unwrap();
        let mut semantic = depth_to_cloud(&trav, k, PointClass::Traversable, stride).unwrap();
        semantic
            .extend_from(&depth_to_cloud(&obst, k, PointClass::Obstacle, stride).unwrap())
            .unwrap();
        let raw = depth_to_cloud(&self.depth, k, PointClass::Obstacle, stride).unwrap();
        (
            transform_cloud(&raw, &s.camera.mount, &s.start).unwrap(),
            transform_cloud(&semantic, &s.camera.mount, &s.start).unwrap(),
        )
    }

    pub fn update(&mut self, clouds: &(LabeledCloud, LabeledCloud)) -> CostGrid {
        let inputs = LayerInputs {
            scan: Some((&self.scan, self.scenario.start)),
            obstacle_cloud: Some(&clouds.0),
            traversable_cloud: Some(&clouds.1),
        };
        self.stack.update(self.scenario.start, &inputs).unwrap()
    }

    pub fn plan(&self, master: &CostGrid) -> Path {
        let s = &self.scenario;
        let start = master.world_to_cell(s.start.position()).unwrap();
        plan_toward(master, start, s.goal, &s.planner).unwrap()
    }

    /// The timed part of one navigation tick.
    pub fn tick(&mut self) -> Path {
        let clouds = self.clouds();
        let master = self.update(&clouds);
        self.plan(&master)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_plans_through_cleared_grass() {
        let mut f = Fixture::corridor();
        let path = f.tick();
        assert!(!f.stack.last_cleared().is_empty());
        // straight through the grass, nowhere near the 10 m detour
        assert!(path.length < 6.0, "{}", path.length);
    }
}
