//! Synthetic scenes and simulated sensors.
//!
//! Regions are vertical prisms (rectangles or discs) standing on the ground
//! plane `z = 0`. Grass stops LiDAR beams exactly like a solid does, but the
//! segmentation oracle labels it traversable. Rays only hit a region when they
//! enter it, so a sensor inside a grass patch sees through that patch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{CostGrid, Point2, Pose2D, FREE, LETHAL};
use crate::perception::{
    robot_point_to_world, CameraIntrinsics, CameraMount, DepthImage, SegClass, SegMask, Segmenter,
};
use crate::scan::RangeScan;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("sensor at ({x:.3}, {y:.3}) is outside the world")]
    SensorOutsideWorld { x: f64, y: f64 },
    #[error("invalid world: {0}")]
    InvalidWorld(String),
    #[error("invalid sensor setup: {0}")]
    InvalidSensor(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Rect { min: [f64; 2], max: [f64; 2] },
    Disc { center: [f64; 2], radius: f64 },
}

impl Shape {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Rect { min, max } => x >= min[0] && x <= max[0] && y >= min[1] && y <= max[1],
            Shape::Disc { center, radius } => (x - center[0]).hypot(y - center[1]) <= radius,
        }
    }

    /// Whether the shape overlaps the open rectangle `(lo, hi)` with positive area.
    pub fn overlaps_box(&self, lo: [f64; 2], hi: [f64; 2]) -> bool {
        const EPS: f64 = 1e-9;
        match *self {
            Shape::Rect { min, max } => {
                min[0] < hi[0] - EPS
                    && max[0] > lo[0] + EPS
                    && min[1] < hi[1] - EPS
                    && max[1] > lo[1] + EPS
            }
            Shape::Disc { center, radius } => {
                let nx = center[0].clamp(lo[0], hi[0]);
                let ny = center[1].clamp(lo[1], hi[1]);
                (nx - center[0]).hypot(ny - center[1]) < radius - EPS
            }
        }
    }

    fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        match *self {
            Shape::Rect { min, max } => (min, max),
            Shape::Disc { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
        }
    }

    /// Parameter interval where the planar ray `o + t d` is inside the shape.
    fn ray_interval(&self, o: [f64; 3], d: [f64; 3]) -> Option<(f64, f64)> {
        match *self {
            Shape::Rect { min, max } => {
                let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
                for a in 0..2 {
                    if d[a] == 0.0 {
                        if o[a] < min[a] || o[a] > max[a] {
                            return None;
                        }
                    } else {
                        let ta = (min[a] - o[a]) / d[a];
                        let tb = (max[a] - o[a]) / d[a];
                        t0 = t0.max(ta.min(tb));
                        t1 = t1.min(ta.max(tb));
                    }
                }
                (t0 <= t1).then_some((t0, t1))
            }
            Shape::Disc { center, radius } => {
                let (px, py) = (o[0] - center[0], o[1] - center[1]);
                let a = d[0] * d[0] + d[1] * d[1];
                let c = px * px + py * py - radius * radius;
                if a == 0.0 {
                    return (c <= 0.0).then_some((f64::NEG_INFINITY, f64::INFINITY));
                }
                let b = px * d[0] + py * d[1];
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                Some(((-b - s) / a, (-b + s) / a))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionClass {
    Solid,
    Grass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub shape: Shape,
    pub class: RegionClass,
    /// Meters above the ground plane.
    pub height: f64,
}

impl Region {
    /// Entry parameter of the ray into this prism; `None` if the ray misses or
    /// starts inside.
    fn enter(&self, o: [f64; 3], d: [f64; 3]) -> Option<f64> {
        let (mut t0, mut t1) = self.shape.ray_interval(o, d)?;
        if d[2] == 0.0 {
            if o[2] < 0.0 || o[2] > self.height {
                return None;
            }
        } else {
            let ta = -o[2] / d[2];
            let tb = (self.height - o[2]) / d[2];
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
        }
        (t0 <= t1 && t0 >= 0.0).then_some(t0)
    }
}

/// A rectangular world `[0, extent[0]] x [0, extent[1]]`. Ground not covered
/// by a solid is traversable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldModel {
    pub extent: [f64; 2],
    #[serde(default)]
    pub regions: Vec<Region>,
}

/// What a ray hit first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Surface {
    Ground,
    Region(RegionClass),
}

impl WorldModel {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.extent[0] > 0.0
            && self.extent[1] > 0.0
            && self.extent.iter().all(|v| v.is_finite()))
        {
            return Err(SimError::InvalidWorld(format!("extent {:?}", self.extent)));
        }
        for (i, r) in self.regions.iter().enumerate() {
            if !(r.height > 0.0 && r.height.is_finite()) {
                return Err(SimError::InvalidWorld(format!(
                    "region {i} has height {}",
                    r.height
                )));
            }
            if let Shape::Disc { radius, .. } = r.shape {
                if !(radius > 0.0) {
                    return Err(SimError::InvalidWorld(format!(
                        "region {i} has radius {radius}"
                    )));
                }
            }
            let (lo, hi) = r.shape.bbox();
            let eps = 1e-9;
            if lo[0] < -eps
                || lo[1] < -eps
                || hi[0] > self.extent[0] + eps
                || hi[1] > self.extent[1] + eps
                || lo[0] > hi[0]
                || lo[1] > hi[1]
            {
                return Err(SimError::InvalidWorld(format!(
                    "region {i} lies outside the extent"
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= self.extent[0] && p.y <= self.extent[1]
    }

    /// Class of the region covering `(x, y)` at ground level; solids win.
    pub fn class_at(&self, x: f64, y: f64) -> Option<RegionClass> {
        let mut found = None;
        for r in self.regions.iter().filter(|r| r.shape.contains(x, y)) {
            if r.class == RegionClass::Solid {
                return Some(RegionClass::Solid);
            }
            found = Some(r.class);
        }
        found
    }

    pub fn has_grass(&self) -> bool {
        self.regions.iter().any(|r| r.class == RegionClass::Grass)
    }

    /// First surface hit by `o + t d`, `t >= 0`, with its parameter.
    pub fn cast(&self, o: [f64; 3], d: [f64; 3]) -> Option<(f64, Surface)> {
        let mut best: Option<(f64, Surface)> = None;
        if d[2] < 0.0 && o[2] >= 0.0 {
            best = Some((-o[2] / d[2], Surface::Ground));
        }
        for r in &self.regions {
            if let Some(t) = r.enter(o, d) {
                // Ties go to the region: a ray grazing a wall foot is blocked.
                if best.is_none_or(|(bt, _)| t <= bt) {
                    best = Some((t, Surface::Region(r.class)));
                }
            }
        }
        best
    }
}

/// Cells overlapping any solid region are lethal, everything else free. The
/// grid covers the world extent with its origin at the world origin.
pub fn rasterize_static(world: &WorldModel, resolution: f64) -> Result<CostGrid, SimError> {
    if !(resolution > 0.0) {
        return Err(SimError::InvalidWorld(format!("resolution {resolution}")));
    }
    let w = (world.extent[0] / resolution - 1e-9).ceil() as usize;
    let h = (world.extent[1] / resolution - 1e-9).ceil() as usize;
    let mut g = CostGrid::new(w, h, resolution, Point2::new(0.0, 0.0), FREE)
        .map_err(|e| SimError::InvalidWorld(e.to_string()))?;
    let solids: Vec<&Region> = world
        .regions
        .iter()
        .filter(|r| r.class == RegionClass::Solid)
        .collect();
    for (i, cell) in g.cells_mut().iter_mut().enumerate() {
        let (col, row) = ((i % w) as f64, (i / w) as f64);
        let lo = [col * resolution, row * resolution];
        let hi = [lo[0] + resolution, lo[1] + resolution];
        if solids.iter().any(|r| r.shape.overlaps_box(lo, hi)) {
            *cell = LETHAL;
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LidarSpec {
    /// Scan plane height above the ground, meters.
    pub height: f64,
    pub angle_min: f64,
    pub angle_max: f64,
    pub n_beams: usize,
    pub max_range: f64,
}

impl Default for LidarSpec {
    fn default() -> Self {
        Self {
            height: 0.3,
            angle_min: -std::f64::consts::PI,
            angle_max: std::f64::consts::PI,
            n_beams: 1440,
            max_range: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub intrinsics: CameraIntrinsics,
    pub mount: CameraMount,
    /// Hits deeper than this are reported as no return, meters.
    #[serde(default = "default_camera_range")]
    pub max_range: f64,
    /// Pixel stride used when projecting depth to points.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_camera_range() -> f64 {
    6.0
}

fn default_stride() -> usize {
    4
}

impl CameraSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        self.intrinsics
            .validate()
            .map_err(|e| SimError::InvalidSensor(e.to_string()))?;
        if !(self.max_range > 0.0) || self.stride == 0 {
            return Err(SimError::InvalidSensor(
                "camera max_range and stride must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorNoise {
    pub range_sigma: f64,
    /// Standard deviation of the multiplicative depth error.
    pub depth_sigma_rel: f64,
    pub seed: u64,
}

impl SensorNoise {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.range_sigma >= 0.0 && self.depth_sigma_rel >= 0.0) {
            return Err(SimError::InvalidSensor(
                "noise sigmas must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Independent generator for one (stream, index) pair of this seed.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

fn normal(sigma: f64) -> Option<Normal<f64>> {
    (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("sigma is positive and finite"))
}

/// One simulated 2D scan. Grass is opaque to the beams.
pub fn lidar_scan(
    world: &WorldModel,
    sensor: Pose2D,
    spec: &LidarSpec,
    noise: &SensorNoise,
    stamp: f64,
) -> Result<RangeScan, SimError> {
    if !world.contains(sensor.position()) {
        return Err(SimError::SensorOutsideWorld {
            x: sensor.x,
            y: sensor.y,
        });
    }
    let mut scan = RangeScan {
        stamp,
        angle_min: spec.angle_min,
        angle_max: spec.angle_max,
        max_range: spec.max_range,
        ranges: vec![spec.max_range; spec.n_beams],
    };
    let mut rng = noise.rng(0);
    let dist = normal(noise.range_sigma);
    let o = [sensor.x, sensor.y, spec.height];
    for i in 0..spec.n_beams {
        let (s, c) = (sensor.theta + scan.beam_angle(i)).sin_cos();
        let Some((t, _)) = world.cast(o, [c, s, 0.0]) else {
            continue;
        };
        if t >= spec.max_range {
            continue;
        }
        let mut r = t;
        if let Some(n) = &dist {
            r += n.sample(&mut rng);
        }
        scan.ranges[i] = r.clamp(1e-3, spec.max_range);
    }
    Ok(scan)
}

/// Depth image and oracle mask from one ray per pixel, so both always agree.
///
/// Only pixels on the `stride` lattice are cast; the rest are invalid and
/// DontCare. Depth is the optical-axis (Z) distance.
pub fn render_view(
    world: &WorldModel,
    robot: Pose2D,
    camera: &CameraSpec,
    noise: &SensorNoise,
    stamp: f64,
    stride: usize,
) -> (DepthImage, SegMask) {
    let k = &camera.intrinsics;
    let (w, h) = (k.width, k.height);
    let mut depth = vec![0.0; w * h];
    let mut classes = vec![SegClass::DontCare; w * h];
    let r = camera.mount.rotation();
    let o = robot_point_to_world(camera.mount.position, &robot);
    let (sn, cs) = robot.theta.sin_cos();
    let mut rng = noise.rng(1);
    let dist = normal(noise.depth_sigma_rel);
    for v in (0..h).step_by(stride.max(1)) {
        let yn = (v as f64 - k.cy) / k.fy;
        for u in (0..w).step_by(stride.max(1)) {
            let xn = (u as f64 - k.cx) / k.fx;
            // Unnormalised optical ray (xn, yn, 1): the hit parameter is Z.
            let b = [
                r[0][0] * xn + r[0][1] * yn + r[0][2],
                r[1][0] * xn + r[1][1] * yn + r[1][2],
                r[2][0] * xn + r[2][1] * yn + r[2][2],
            ];
            let d = [cs * b[0] - sn * b[1], sn * b[0] + cs * b[1], b[2]];
            let Some((z, surface)) = world.cast(o, d) else {
                continue;
            };
            if z > camera.max_range || z <= 0.0 {
                continue;
            }
            let i = v * w + u;
            classes[i] = match surface {
                Surface::Region(RegionClass::Solid) => SegClass::Obstacle,
                _ => SegClass::Traversable,
            };
            depth[i] = match &dist {
                Some(n) => (z * (1.0 + n.sample(&mut rng))).max(1e-3),
                None => z,
            };
        }
    }
    (
        DepthImage {
            width: w,
            height: h,
            stamp,
            depth,
        },
        SegMask {
            width: w,
            height: h,
            stamp,
            classes,
        },
    )
}

pub fn depth_render(
    world: &WorldModel,
    robot: Pose2D,
    camera: &CameraSpec,
    noise: &SensorNoise,
    stamp: f64,
) -> DepthImage {
    render_view(world, robot, camera, noise, stamp, 1).0
}

pub fn oracle_segment(
    world: &WorldModel,
    robot: Pose2D,
    camera: &CameraSpec,
    stamp: f64,
) -> SegMask {
    render_view(world, robot, camera, &SensorNoise::default(), stamp, 1).1
}

/// Swaps Traversable and Obstacle labels independently with probability
/// `flip_rate`. DontCare pixels are left alone.
pub fn corrupt_mask(mask: &SegMask, flip_rate: f64, seed: u64) -> Result<SegMask, SimError> {
    if !(0.0..=1.0).contains(&flip_rate) {
        return Err(SimError::InvalidSensor(format!("flip_rate {flip_rate}")));
    }
    let mut out = mask.clone();
    if flip_rate == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for c in &mut out.classes {
        let flipped = match *c {
            SegClass::Traversable => SegClass::Obstacle,
            SegClass::Obstacle => SegClass::Traversable,
            SegClass::DontCare => continue,
        };
        if rng.random_bool(flip_rate) {
            *c = flipped;
        }
    }
    Ok(out)
}

/// Where and when the oracle should look.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct View {
    pub robot: Pose2D,
    pub stamp: f64,
}

/// Ground-truth segmentation backed by the simulated world.
pub struct OracleSegmenter<'w> {
    pub world: &'w WorldModel,
    pub camera: CameraSpec,
    pub stride: usize,
}

impl Segmenter for OracleSegmenter<'_> {
    type Frame = View;
    type Error = std::convert::Infallible;

    fn segment(&mut self, frame: &View) -> Result<SegMask, Self::Error> {
        Ok(render_view(
            self.world,
            frame.robot,
            &self.camera,
            &SensorNoise::default(),
            frame.stamp,
            self.stride,
        )
        .1)
    }
}
