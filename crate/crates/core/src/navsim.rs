//! Closed-loop scenario runner.
//!
//! Every tick: scan, render depth and mask with jittered stamps, pair them in
//! the synchronizer, build the raw and semantic clouds, update the costmap,
//! plan towards the goal and move the point robot along the plan.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{CostGrid, GridError, Point2, Pose2D, RollingWindow, LETHAL};
use crate::layers::{LayerError, LayerInputs, LayerKind, LayerStack, StackConfig};
use crate::perception::{
    depth_to_cloud_within, mask_depth, transform_cloud, DepthImage, LabeledCloud, PerceptionError,
    PointClass, SegClass, SegMask,
};
use crate::planner::{plan_toward, PlannerConfig};
use crate::simworld::{
    corrupt_mask, lidar_scan, rasterize_static, render_view, CameraSpec, LidarSpec, SensorNoise,
    SimError, WorldModel,
};
use crate::sync::{SyncConfig, SyncError, Synchronizer};

#[derive(Debug, Error)]
pub enum NavError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Layer(#[from] LayerError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Sync(#[from] SyncError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub range_sigma: f64,
    pub depth_sigma_rel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostmapConfig {
    pub width_m: f64,
    pub height_m: f64,
    pub resolution: f64,
    /// Seed the static layer with the world's solid regions.
    pub static_map: bool,
}

impl Default for CostmapConfig {
    fn default() -> Self {
        Self {
            width_m: 10.0,
            height_m: 10.0,
            resolution: 0.05,
            static_map: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub tick_hz: f64,
    pub robot_speed: f64,
    pub max_ticks: u64,
    pub goal_tolerance: f64,
    /// Consecutive planning failures before giving up.
    pub abort_after: u32,
    /// Depth and mask stamps are offset by independent uniform draws in
    /// `[-stamp_jitter, stamp_jitter]`, seconds.
    pub stamp_jitter: f64,
    /// Probability of swapping each labeled mask pixel.
    pub mask_flip_rate: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            tick_hz: 10.0,
            robot_speed: 0.5,
            max_ticks: 600,
            goal_tolerance: 0.2,
            abort_after: 10,
            stamp_jitter: 0.03,
            mask_flip_rate: 0.0,
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub world: WorldModel,
    pub start: Pose2D,
    pub goal: Point2,
    #[serde(default)]
    pub lidar: LidarSpec,
    pub camera: CameraSpec,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub costmap: CostmapConfig,
    #[serde(default)]
    pub layers: StackConfig,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub sync: SyncConfig,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default = "default_true")]
    pub clearing_enabled: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), NavError> {
        let bad = |m: String| Err(NavError::InvalidScenario(m));
        self.world.validate()?;
        self.camera.validate()?;
        self.sync.validate()?;
        if !self.world.contains(self.start.position()) {
            return bad(format!(
                "start ({}, {}) is outside the world",
                self.start.x, self.start.y
            ));
        }
        if !self.world.contains(self.goal) {
            return bad(format!(
                "goal ({}, {}) is outside the world",
                self.goal.x, self.goal.y
            ));
        }
        let s = &self.sim;
        if !(s.tick_hz > 0.0 && s.tick_hz.is_finite()) {
            return bad(format!("tick_hz {}", s.tick_hz));
        }
        if !(s.robot_speed > 0.0 && s.robot_speed.is_finite()) {
            return bad(format!("robot_speed {}", s.robot_speed));
        }
        if !(s.goal_tolerance >= 0.0) || s.abort_after == 0 {
            return bad("goal_tolerance must be >= 0 and abort_after >= 1".into());
        }
        if !(s.stamp_jitter >= 0.0 && s.stamp_jitter < 0.5 / s.tick_hz) {
            return bad(format!(
                "stamp_jitter {} must be below half a tick",
                s.stamp_jitter
            ));
        }
        if !(0.0..=1.0).contains(&s.mask_flip_rate) {
            return bad(format!("mask_flip_rate {}", s.mask_flip_rate));
        }
        if !(self.noise.range_sigma >= 0.0 && self.noise.depth_sigma_rel >= 0.0) {
            return bad("noise sigmas must be non-negative".into());
        }
        let c = &self.costmap;
        if !(c.resolution > 0.0 && c.width_m >= c.resolution && c.height_m >= c.resolution) {
            return bad("costmap window must hold at least one cell".into());
        }
        if self.lidar.n_beams == 0 || !(self.lidar.max_range > 0.0) {
            return bad("lidar needs beams and a positive range".into());
        }
        if !(self.planner.cost_weight >= 0.0) || !(self.planner.escape_radius_m >= 0.0) {
            return bad("planner weights must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Reached,
    NoPathAbort,
    Timeout,
}

/// Per-tick pipeline latency summary, milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSummary {
    pub samples: usize,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
}

impl TimingSummary {
    /// Nearest-rank percentiles of `seconds`.
    pub fn from_seconds(seconds: &[f64]) -> Option<Self> {
        if seconds.is_empty() {
            return None;
        }
        let mut v: Vec<f64> = seconds.iter().map(|s| s * 1e3).collect();
        v.sort_by(f64::total_cmp);
        let rank = |p: f64| v[((p * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
        Some(Self {
            samples: v.len(),
            p50_ms: rank(0.5),
            p95_ms: rank(0.95),
            max_ms: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMetrics {
    pub outcome: Outcome,
    pub traveled_length: f64,
    /// Length of the first successful plan, including the straight remainder
    /// when the goal lay outside the window. `None` if no plan ever succeeded.
    pub first_plan_length: Option<f64>,
    pub ticks: u64,
    /// Successful plans after the first one.
    pub replans: u64,
    pub cells_cleared_total: u64,
    /// Ground-truth solid cells the robot passed through.
    pub solid_cells_entered: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingSummary>,
    /// Pipeline time of each tick, seconds. Not serialized: wall-clock values
    /// would break byte-identical output.
    #[serde(skip)]
    pub cycle_times: Vec<f64>,
}

impl RunMetrics {
    pub fn timing_summary(&self) -> Option<TimingSummary> {
        TimingSummary::from_seconds(&self.cycle_times)
    }
}

/// What the observer sees after each tick.
pub struct TickReport<'a> {
    pub tick: u64,
    /// Pose after this tick's motion.
    pub pose: Pose2D,
    /// Pose the costmap was built at.
    pub sensed_at: Pose2D,
    pub master: &'a CostGrid,
    /// Row-major indices cleared by the clearing layer this tick.
    pub cleared: &'a [usize],
    pub planned: bool,
}

pub fn run(s: &Scenario) -> Result<RunMetrics, NavError> {
    run_with_observer(s, |_| {})
}

/// Runs the identical scenario with and without the clearing layer.
pub fn compare(s: &Scenario) -> Result<(RunMetrics, RunMetrics), NavError> {
    let mut with = s.clone();
    with.clearing_enabled = true;
    let mut without = s.clone();
    without.clearing_enabled = false;
    Ok((run(&with)?, run(&without)?))
}

/// Independent per-tick seeds for (lidar, camera, jitter, mask corruption).
fn tick_seeds(seed: u64, tick: u64) -> [u64; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tick);
    rng.random()
}

struct CameraFrame {
    depth: DepthImage,
    pose: Pose2D,
}

pub fn run_with_observer(
    s: &Scenario,
    mut observe: impl FnMut(&TickReport<'_>),
) -> Result<RunMetrics, NavError> {
    s.validate()?;
    let res = s.costmap.resolution;
    let window = RollingWindow::with_extent(s.costmap.width_m, s.costmap.height_m, res, s.start)?;
    let truth = rasterize_static(&s.world, res)?;
    let reference = s.costmap.static_map.then(|| truth.clone());
    let mut stack = LayerStack::standard(window, reference, &s.layers)?;
    stack.set_enabled(LayerKind::Clearing, s.clearing_enabled);
    let mut sync: Synchronizer<CameraFrame, SegMask> = Synchronizer::new(s.sync)?;

    let k = s.camera.intrinsics;
    let step = s.sim.robot_speed / s.sim.tick_hz;
    let mut pose = s.start;
    let mut metrics = RunMetrics {
        outcome: Outcome::Timeout,
        traveled_length: 0.0,
        first_plan_length: None,
        ticks: 0,
        replans: 0,
        cells_cleared_total: 0,
        solid_cells_entered: 0,
        timing: None,
        cycle_times: Vec::new(),
    };
    let mut failures = 0u32;
    let mut plans = 0u64;
    let mut clouds: Option<(LabeledCloud, LabeledCloud)> = None;

    if pose.position().distance(&s.goal) <= s.sim.goal_tolerance {
        metrics.outcome = Outcome::Reached;
        return Ok(metrics);
    }

    for tick in 0..s.sim.max_ticks {
        let t = tick as f64 / s.sim.tick_hz;
        let [lidar_seed, camera_seed, jitter_seed, flip_seed] = tick_seeds(s.seed, tick);
        let noise = |seed| SensorNoise {
            range_sigma: s.noise.range_sigma,
            depth_sigma_rel: s.noise.depth_sigma_rel,
            seed,
        };
        let scan = lidar_scan(&s.world, pose, &s.lidar, &noise(lidar_seed), t)?;
        let (mut depth, mut mask) = render_view(
            &s.world,
            pose,
            &s.camera,
            &noise(camera_seed),
            t,
            s.camera.stride,
        );
        let mut jitter = ChaCha8Rng::seed_from_u64(jitter_seed);
        let j = s.sim.stamp_jitter;
        if j > 0.0 {
            depth.stamp = t + jitter.random_range(-j..=j);
            mask.stamp = t + jitter.random_range(-j..=j);
        }
        if s.sim.mask_flip_rate > 0.0 {
            mask = corrupt_mask(&mask, s.sim.mask_flip_rate, flip_seed)?;
        }
        let mut pairs = sync.push_a(depth.stamp, CameraFrame { depth, pose })?;
        pairs.extend(sync.push_b(mask.stamp, mask)?);

        let started = Instant::now();
        if let Some((frame, mask)) = pairs.pop() {
            let (frame, mask) = (frame.payload, mask.payload);
            let max = s.camera.max_range;
            let stride = s.camera.stride;
            let trav = mask_depth(&frame.depth, &mask, SegClass::Traversable)?;
            let obst = mask_depth(&frame.depth, &mask, SegClass::Obstacle)?;
            let mut semantic =
                depth_to_cloud_within(&trav, &k, PointClass::Traversable, stride, max)?;
            semantic.extend_from(&depth_to_cloud_within(
                &obst,
                &k,
                PointClass::Obstacle,
                stride,
                max,
            )?)?;
            let raw = depth_to_cloud_within(&frame.depth, &k, PointClass::Obstacle, stride, max)?;
            clouds = Some((
                transform_cloud(&raw, &s.camera.mount, &frame.pose)?,
                transform_cloud(&semantic, &s.camera.mount, &frame.pose)?,
            ));
        }
        let inputs = LayerInputs {
            scan: Some((&scan, pose)),
            obstacle_cloud: clouds.as_ref().map(|c| &c.0),
            traversable_cloud: clouds.as_ref().map(|c| &c.1),
        };
        let master = stack.update(pose, &inputs)?;
        let start_cell = master.world_to_cell(pose.position())?;
        let plan = plan_toward(&master, start_cell, s.goal, &s.planner);
        metrics.cycle_times.push(started.elapsed().as_secs_f64());

        metrics.ticks = tick + 1;
        metrics.cells_cleared_total += stack.last_cleared().len() as u64;
        let sensed_at = pose;
        let planned = plan.is_ok();
        match plan {
            Ok(path) => {
                failures = 0;
                plans += 1;
                // Drive from the true position through the intermediate cell
                // centres; a goal inside the window replaces its own cell.
                let goal_inside = master.world_to_cell(s.goal).is_ok();
                let centres = &path.waypoints[1..path.waypoints.len() - usize::from(goal_inside)];
                let mut polyline: Vec<Point2> = vec![pose.position()];
                polyline.extend(
                    centres
                        .iter()
                        .map(|&c| master.cell_to_world(c).expect("path cell")),
                );
                if goal_inside {
                    polyline.push(s.goal);
                }
                let end = *polyline.last().expect("non-empty");
                if metrics.first_plan_length.is_none() {
                    let mut len: f64 = polyline.windows(2).map(|w| w[0].distance(&w[1])).sum();
                    if !goal_inside {
                        len += end.distance(&s.goal);
                    }
                    metrics.first_plan_length = Some(len);
                }
                let moved = advance(&mut pose, &polyline, step);
                metrics.solid_cells_entered += solid_cells_on(&truth, &polyline, moved);
                metrics.traveled_length += moved;
            }
            Err(_) => failures += 1,
        }
        observe(&TickReport {
            tick,
            pose,
            sensed_at,
            master: &master,
            cleared: stack.last_cleared(),
            planned,
        });
        if pose.position().distance(&s.goal) <= s.sim.goal_tolerance {
            metrics.outcome = Outcome::Reached;
            break;
        }
        if failures >= s.sim.abort_after {
            metrics.outcome = Outcome::NoPathAbort;
            break;
        }
    }
    metrics.replans = plans.saturating_sub(1);
    Ok(metrics)
}

/// Moves `pose` up to `step` meters along `polyline` (which starts at the
/// pose) and returns the distance moved.
fn advance(pose: &mut Pose2D, polyline: &[Point2], step: f64) -> f64 {
    let mut left = step;
    let mut pos = pose.position();
    let mut heading = pose.theta;
    for w in polyline.windows(2) {
        let seg = w[0].distance(&w[1]);
        if seg == 0.0 {
            continue;
        }
        heading = (w[1].y - w[0].y).atan2(w[1].x - w[0].x);
        if seg >= left {
            let f = left / seg;
            pos = Point2::new(
                w[0].x + f * (w[1].x - w[0].x),
                w[0].y + f * (w[1].y - w[0].y),
            );
            left = 0.0;
            break;
        }
        left -= seg;
        pos = w[1];
    }
    *pose = Pose2D::new(pos.x, pos.y, heading);
    step - left
}

/// Distinct ground-truth solid cells touched while moving `distance` along
/// the polyline, sampled every quarter cell.
fn solid_cells_on(truth: &CostGrid, polyline: &[Point2], distance: f64) -> u64 {
    let ds = truth.resolution() / 4.0;
    let mut hit = Vec::new();
    let mut travelled = 0.0;
    for w in polyline.windows(2) {
        let seg = w[0].distance(&w[1]);
        let n = (seg / ds).ceil().max(1.0) as usize;
        for i in 0..=n {
            let d = travelled + seg * i as f64 / n as f64;
            if d > distance + 1e-12 {
                break;
            }
            let f = i as f64 / n as f64;
            let p = Point2::new(
                w[0].x + f * (w[1].x - w[0].x),
                w[0].y + f * (w[1].y - w[0].y),
            );
            if let Ok(c) = truth.world_to_cell(p) {
                if truth.get(c) == Some(LETHAL) && !hit.contains(&c) {
                    hit.push(c);
                }
            }
        }
        travelled += seg;
        if travelled >= distance {
            break;
        }
    }
    hit.len() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::{CameraIntrinsics, CameraMount};
    use crate::simworld::{Region, RegionClass, Shape};

    fn camera() -> CameraSpec {
        CameraSpec {
            intrinsics: CameraIntrinsics::new(160.0, 160.0, 160.0, 120.0, 320, 240).unwrap(),
            mount: CameraMount {
                position: [-0.1, 0.0, 0.6],
                pitch: 0.35,
                yaw: 0.0,
            },
            max_range: 6.0,
            stride: 4,
        }
    }

    pub(crate) fn empty_scenario() -> Scenario {
        Scenario {
            name: "empty".into(),
            world: WorldModel {
                extent: [10.0, 10.0],
                regions: vec![],
            },
            start: Pose2D::new(2.0, 5.0, 0.0),
            goal: Point2::new(5.0, 5.0),
            lidar: LidarSpec::default(),
            camera: camera(),
            noise: NoiseConfig::default(),
            costmap: CostmapConfig::default(),
            layers: StackConfig::default(),
            planner: PlannerConfig::default(),
            sync: SyncConfig::default(),
            sim: SimConfig::default(),
            clearing_enabled: true,
            seed: 1,
        }
    }

    #[test]
    fn empty_world_goes_straight() {
        let m = run(&empty_scenario()).unwrap();
        assert_eq!(m.outcome, Outcome::Reached);
        assert!(
            (m.traveled_length - 3.0).abs() <= 0.2,
            "{}",
            m.traveled_length
        );
        assert!((55..=60).contains(&m.ticks), "{}", m.ticks);
        assert!((m.first_plan_length.unwrap() - 3.0).abs() < 0.05);
        assert_eq!(m.solid_cells_entered, 0);
        assert_eq!(m.cells_cleared_total, 0);
    }

    #[test]
    fn runs_are_deterministic() {
        let mut s = empty_scenario();
        s.noise = NoiseConfig {
            range_sigma: 0.01,
            depth_sigma_rel: 0.01,
        };
        s.world.regions.push(Region {
            shape: Shape::Disc {
                center: [3.5, 5.3],
                radius: 0.3,
            },
            class: RegionClass::Solid,
            height: 2.0,
        });
        let mut snaps_a = Vec::new();
        let a = run_with_observer(&s, |r| snaps_a.push(r.master.cells().to_vec())).unwrap();
        let mut snaps_b = Vec::new();
        let b = run_with_observer(&s, |r| snaps_b.push(r.master.cells().to_vec())).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(snaps_a, snaps_b);
        assert_eq!(a.outcome, Outcome::Reached);
        assert!(a.traveled_length > 2.8);
    }

    #[test]
    fn wall_without_gap_aborts() {
        let mut s = empty_scenario();
        s.world.regions.push(Region {
            shape: Shape::Rect {
                min: [3.5, 0.0],
                max: [3.7, 10.0],
            },
            class: RegionClass::Solid,
            height: 2.0,
        });
        let m = run(&s).unwrap();
        assert_eq!(m.outcome, Outcome::NoPathAbort);
        assert_eq!(m.ticks, 10);
        assert_eq!(m.first_plan_length, None);
        assert_eq!(m.traveled_length, 0.0);
    }

    #[test]
    fn timeout_is_reported() {
        let mut s = empty_scenario();
        s.sim.max_ticks = 5;
        let m = run(&s).unwrap();
        assert_eq!(m.outcome, Outcome::Timeout);
        assert_eq!(m.ticks, 5);
        assert_eq!(m.cycle_times.len(), 5);
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        let mut s = empty_scenario();
        s.goal = Point2::new(11.0, 5.0);
        assert!(matches!(run(&s), Err(NavError::InvalidScenario(_))));
        let mut s = empty_scenario();
        s.sim.stamp_jitter = 0.06;
        assert!(matches!(run(&s), Err(NavError::InvalidScenario(_))));
        let mut v = serde_json::to_value(empty_scenario()).unwrap();
        assert!(serde_json::from_value::<Scenario>(v.clone()).is_ok());
        v["sim"]["bogus"] = 1.into();
        assert!(serde_json::from_value::<Scenario>(v).is_err());
    }

    #[test]
    fn timing_percentiles() {
        let t = TimingSummary::from_seconds(&[0.004, 0.001, 0.003, 0.002]).unwrap();
        assert_eq!(t.p50_ms, 2.0);
        assert_eq!(t.p95_ms, 4.0);
        assert_eq!(t.samples, 4);
        assert!(TimingSummary::from_seconds(&[]).is_none());
    }

    #[test]
    fn advance_follows_polyline() {
        let mut p = Pose2D::new(0.0, 0.0, 0.0);
        let line = [
            Point2::new(0.0, 0.0),
            Point2::new(0.1, 0.0),
            Point2::new(0.1, 0.1),
        ];
        assert!((advance(&mut p, &line, 0.15) - 0.15).abs() < 1e-12);
        assert!((p.x - 0.1).abs() < 1e-12 && (p.y - 0.05).abs() < 1e-12);
        assert!((p.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let mut q = Pose2D::new(0.0, 0.0, 0.0);
        assert!((advance(&mut q, &line, 1.0) - 0.2).abs() < 1e-12);
    }
}
