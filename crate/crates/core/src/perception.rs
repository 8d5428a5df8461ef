//! Segmentation-mask contract, masked depth projection and frame transforms.
//!
//! Camera (optical) frame: x right, y down, z forward. Robot frame: x
//! forward, y left, z up. World frame: robot frame moved by the planar robot
//! pose, with z measured from the ground plane.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Pose2D;
use crate::netpbm::{self, NetpbmError};

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error("image dimensions differ: {a_w}x{a_h} vs {b_w}x{b_h}")]
    DimensionMismatch {
        a_w: usize,
        a_h: usize,
        b_w: usize,
        b_h: usize,
    },
    #[error("cloud is in the {actual:?} frame, expected {expected:?}")]
    WrongFrame { expected: Frame, actual: Frame },
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error(transparent)]
    Netpbm(#[from] NetpbmError),
}

/// Pinhole intrinsics, no distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
    ) -> Result<Self, PerceptionError> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), PerceptionError> {
        let finite = [self.fx, self.fy, self.cx, self.cy]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(PerceptionError::InvalidIntrinsics(
                "focal lengths must be positive".into(),
            ));
        }
        if !(0.0..self.width as f64).contains(&self.cx)
            || !(0.0..self.height as f64).contains(&self.cy)
        {
            return Err(PerceptionError::InvalidIntrinsics(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Pixel coordinates and depth of a camera-frame point.
    pub fn project(&self, p: [f64; 3]) -> (f64, f64, f64) {
        (
            self.fx * p[0] / p[2] + self.cx,
            self.fy * p[1] / p[2] + self.cy,
            p[2],
        )
    }
}

/// Depth image in meters; non-finite or non-positive values mean "no return".
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub stamp: f64,
    pub depth: Vec<f64>,
}

pub fn is_valid_depth(z: f64) -> bool {
    z.is_finite() && z > 0.0
}

impl DepthImage {
    pub fn new(
        width: usize,
        height: usize,
        stamp: f64,
        depth: Vec<f64>,
    ) -> Result<Self, PerceptionError> {
        if depth.len() != width * height {
            return Err(PerceptionError::InvalidImage(format!(
                "{} depth values for {width}x{height}",
                depth.len()
            )));
        }
        Ok(Self {
            width,
            height,
            stamp,
            depth,
        })
    }

    pub fn valid_count(&self) -> usize {
        self.depth.iter().filter(|&&z| is_valid_depth(z)).count()
    }

    /// 16-bit P5 in millimetres; invalid pixels encode as 0.
    pub fn write_pgm<W: Write>(&self, out: W) -> Result<(), PerceptionError> {
        let mm: Vec<u16> = self
            .depth
            .iter()
            .map(|&z| {
                if is_valid_depth(z) {
                    (z * 1000.0).round().clamp(0.0, 65535.0) as u16
                } else {
                    0
                }
            })
            .collect();
        netpbm::write_pgm16(out, self.width, self.height, &mm)?;
        Ok(())
    }

    pub fn read_pgm<R: Read>(input: R, stamp: f64) -> Result<Self, PerceptionError> {
        let g = netpbm::read_pgm(input)?;
        let depth = g.samples.iter().map(|&mm| f64::from(mm) / 1000.0).collect();
        Self::new(g.width, g.height, stamp, depth)
    }
}

/// Per-pixel semantic class. Discriminants are the mask PGM byte values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum SegClass {
    DontCare = 0,
    Obstacle = 1,
    Traversable = 2,
}

impl TryFrom<u8> for SegClass {
    type Error = PerceptionError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(SegClass::DontCare),
            1 => Ok(SegClass::Obstacle),
            2 => Ok(SegClass::Traversable),
            other => Err(PerceptionError::InvalidImage(format!("mask value {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegMask {
    pub width: usize,
    pub height: usize,
    pub stamp: f64,
    pub classes: Vec<SegClass>,
}

impl SegMask {
    pub fn new(
        width: usize,
        height: usize,
        stamp: f64,
        classes: Vec<SegClass>,
    ) -> Result<Self, PerceptionError> {
        if classes.len() != width * height {
            return Err(PerceptionError::InvalidImage(format!(
                "{} mask values for {width}x{height}",
                classes.len()
            )));
        }
        Ok(Self {
            width,
            height,
            stamp,
            classes,
        })
    }

    pub fn filled(width: usize, height: usize, stamp: f64, class: SegClass) -> Self {
        Self {
            width,
            height,
            stamp,
            classes: vec![class; width * height],
        }
    }

    pub fn count(&self, class: SegClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    pub fn write_pgm<W: Write>(&self, out: W) -> Result<(), PerceptionError> {
        let bytes: Vec<u8> = self.classes.iter().map(|&c| c as u8).collect();
        netpbm::write_pgm8(out, self.width, self.height, &bytes)?;
        Ok(())
    }

    pub fn read_pgm<R: Read>(input: R, stamp: f64) -> Result<Self, PerceptionError> {
        let g = netpbm::read_pgm(input)?;
        let (w, h) = (g.width, g.height);
        let classes = g
            .into_bytes()?
            .into_iter()
            .map(SegClass::try_from)
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(w, h, stamp, classes)
    }
}

/// Semantic class carried by a cloud point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointClass {
    Traversable,
    Obstacle,
}

impl From<PointClass> for SegClass {
    fn from(c: PointClass) -> Self {
        match c {
            PointClass::Traversable => SegClass::Traversable,
            PointClass::Obstacle => SegClass::Obstacle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    Camera,
    Robot,
    World,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub class: PointClass,
}

impl LabeledPoint {
    pub fn xyz(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud {
    pub stamp: f64,
    pub frame: Frame,
    pub points: Vec<LabeledPoint>,
}

impl LabeledCloud {
    pub fn empty(stamp: f64, frame: Frame) -> Self {
        Self {
            stamp,
            frame,
            points: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Appends the points of `other`; frames must agree.
    pub fn extend_from(&mut self, other: &LabeledCloud) -> Result<(), PerceptionError> {
        if other.frame != self.frame {
            return Err(PerceptionError::WrongFrame {
                expected: self.frame,
                actual: other.frame,
            });
        }
        self.points.extend_from_slice(&other.points);
        Ok(())
    }
}

/// Camera extrinsics relative to the robot base.
///
/// The camera looks along robot +x when `pitch` and `yaw` are zero; positive
/// pitch tilts the optical axis towards the ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraMount {
    pub position: [f64; 3],
    #[serde(default)]
    pub pitch: f64,
    #[serde(default)]
    pub yaw: f64,
}

impl Default for CameraMount {
    fn default() -> Self {
        Self {
            position: [0.0, 0.0, 0.0],
            pitch: 0.0,
            yaw: 0.0,
        }
    }
}

impl CameraMount {
    /// Rotation taking optical-frame vectors into the robot frame (row-major).
    pub fn rotation(&self) -> [[f64; 3]; 3] {
        let (sp, cp) = self.pitch.sin_cos();
        let (sy, cy) = self.yaw.sin_cos();
        // optical -> body axes: x_b = z_o, y_b = -x_o, z_b = -y_o
        let axes = [[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]];
        // Ry(pitch): positive pitch sends +x towards -z.
        let pitch = [[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]];
        let yaw = [[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]];
        mat_mul(&yaw, &mat_mul(&pitch, &axes))
    }

    /// Optical-frame vector to robot frame (rotation only).
    pub fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        mat_vec(&self.rotation(), v)
    }

    pub fn camera_to_robot(&self, p: [f64; 3]) -> [f64; 3] {
        let r = self.rotate(p);
        [
            r[0] + self.position[0],
            r[1] + self.position[1],
            r[2] + self.position[2],
        ]
    }
}

pub(crate) fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub(crate) fn mat_vec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Robot-frame point to world frame under a planar pose.
pub fn robot_point_to_world(p: [f64; 3], robot: &Pose2D) -> [f64; 3] {
    let (s, c) = robot.theta.sin_cos();
    [
        robot.x + c * p[0] - s * p[1],
        robot.y + s * p[0] + c * p[1],
        p[2],
    ]
}

fn check_dims(a: (usize, usize), b: (usize, usize)) -> Result<(), PerceptionError> {
    if a != b {
        return Err(PerceptionError::DimensionMismatch {
            a_w: a.0,
            a_h: a.1,
            b_w: b.0,
            b_h: b.1,
        });
    }
    Ok(())
}

/// Keeps depth only where the mask has class `keep`; everything else becomes 0.
pub fn mask_depth(
    depth: &DepthImage,
    mask: &SegMask,
    keep: SegClass,
) -> Result<DepthImage, PerceptionError> {
    check_dims((depth.width, depth.height), (mask.width, mask.height))?;
    let out = depth
        .depth
        .iter()
        .zip(&mask.classes)
        .map(|(&z, &c)| {
            if c == keep && is_valid_depth(z) {
                z
            } else {
                0.0
            }
        })
        .collect();
    Ok(DepthImage {
        width: depth.width,
        height: depth.height,
        stamp: depth.stamp,
        depth: out,
    })
}

/// Back-projects valid pixels on the `stride` lattice into the camera frame.
///
/// Points come out in row-major pixel order.
pub fn depth_to_cloud(
    depth: &DepthImage,
    k: &CameraIntrinsics,
    class: PointClass,
    stride: usize,
) -> Result<LabeledCloud, PerceptionError> {
    depth_to_cloud_within(depth, k, class, stride, f64::INFINITY)
}

/// [`depth_to_cloud`] that also drops pixels deeper than `max_depth`.
pub fn depth_to_cloud_within(
    depth: &DepthImage,
    k: &CameraIntrinsics,
    class: PointClass,
    stride: usize,
    max_depth: f64,
) -> Result<LabeledCloud, PerceptionError> {
    check_dims((depth.width, depth.height), (k.width, k.height))?;
    let stride = stride.max(1);
    let (inv_fx, inv_fy) = (1.0 / k.fx, 1.0 / k.fy);
    let mut points = Vec::with_capacity((depth.width / stride + 1) * (depth.height / stride + 1));
    for v in (0..depth.height).step_by(stride) {
        let row = &depth.depth[v * depth.width..(v + 1) * depth.width];
        let yn = (v as f64 - k.cy) * inv_fy;
        for u in (0..depth.width).step_by(stride) {
            let z = row[u];
            if !is_valid_depth(z) || z > max_depth {
                continue;
            }
            points.push(LabeledPoint {
                x: (u as f64 - k.cx) * z * inv_fx,
                y: yn * z,
                z,
                class,
            });
        }
    }
    Ok(LabeledCloud {
        stamp: depth.stamp,
        frame: Frame::Camera,
        points,
    })
}

/// Camera-frame cloud to robot frame.
pub fn camera_to_robot(
    c: &LabeledCloud,
    mount: &CameraMount,
) -> Result<LabeledCloud, PerceptionError> {
    expect_frame(c, Frame::Camera)?;
    let r = mount.rotation();
    let t = mount.position;
    Ok(map_points(c, Frame::Robot, |p| {
        let q = mat_vec(&r, p);
        [q[0] + t[0], q[1] + t[1], q[2] + t[2]]
    }))
}

/// Robot-frame cloud to world frame.
pub fn robot_to_world(c: &LabeledCloud, robot: &Pose2D) -> Result<LabeledCloud, PerceptionError> {
    expect_frame(c, Frame::Robot)?;
    Ok(map_points(c, Frame::World, |p| {
        robot_point_to_world(p, robot)
    }))
}

/// Camera frame straight to world frame.
pub fn transform_cloud(
    c: &LabeledCloud,
    mount: &CameraMount,
    robot: &Pose2D,
) -> Result<LabeledCloud, PerceptionError> {
    expect_frame(c, Frame::Camera)?;
    let r = mount.rotation();
    let t = mount.position;
    Ok(map_points(c, Frame::World, |p| {
        let q = mat_vec(&r, p);
        robot_point_to_world([q[0] + t[0], q[1] + t[1], q[2] + t[2]], robot)
    }))
}

fn expect_frame(c: &LabeledCloud, expected: Frame) -> Result<(), PerceptionError> {
    if c.frame != expected {
        return Err(PerceptionError::WrongFrame {
            expected,
            actual: c.frame,
        });
    }
    Ok(())
}

fn map_points(c: &LabeledCloud, frame: Frame, f: impl Fn([f64; 3]) -> [f64; 3]) -> LabeledCloud {
    LabeledCloud {
        stamp: c.stamp,
        frame,
        points: c
            .points
            .iter()
            .map(|p| {
                let q = f(p.xyz());
                LabeledPoint {
                    x: q[0],
                    y: q[1],
                    z: q[2],
                    class: p.class,
                }
            })
            .collect(),
    }
}

/// Anything that turns a camera frame into a per-pixel semantic mask.
///
/// The mask must match the dimensions of the depth image it is paired with.
pub trait Segmenter {
    type Frame;
    type Error;

    fn segment(&mut self, frame: &Self::Frame) -> Result<SegMask, Self::Error>;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn k100() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0, 101, 101).unwrap()
    }

    fn single_pixel(k: &CameraIntrinsics, u: usize, v: usize, z: f64) -> DepthImage {
        let mut d = vec![0.0; k.width * k.height];
        d[v * k.width + u] = z;
        DepthImage::new(k.width, k.height, 0.0, d).unwrap()
    }

    #[test]
    fn mask_depth_examples() {
        let d = DepthImage::new(2, 1, 0.0, vec![1.0, 2.0]).unwrap();
        let all_t = SegMask::filled(2, 1, 0.0, SegClass::Traversable);
        assert_eq!(mask_depth(&d, &all_t, SegClass::Traversable).unwrap(), d);

        let dc = SegMask::filled(2, 1, 0.0, SegClass::DontCare);
        assert_eq!(
            mask_depth(&d, &dc, SegClass::Traversable)
                .unwrap()
                .valid_count(),
            0
        );

        let m = SegMask::new(2, 1, 0.0, vec![SegClass::Traversable, SegClass::Obstacle]).unwrap();
        let out = mask_depth(&d, &m, SegClass::Traversable).unwrap();
        assert_eq!(out.depth[0], 1.0);
        assert!(!is_valid_depth(out.depth[1]));

        let wrong = SegMask::filled(1, 2, 0.0, SegClass::Traversable);
        assert!(matches!(
            mask_depth(&d, &wrong, SegClass::Traversable),
            Err(PerceptionError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn depth_to_cloud_examples() {
        let k = k100();
        let c = depth_to_cloud(
            &single_pixel(&k, 50, 50, 2.0),
            &k,
            PointClass::Traversable,
            1,
        )
        .unwrap();
        assert_eq!(c.points.len(), 1);
        assert_eq!(c.points[0].xyz(), [0.0, 0.0, 2.0]);

        let c = depth_to_cloud(
            &single_pixel(&k, 60, 50, 1.0),
            &k,
            PointClass::Traversable,
            1,
        )
        .unwrap();
        assert_abs_diff_eq!(c.points[0].x, 0.1, epsilon = 1e-15);
        assert_eq!(c.points[0].y, 0.0);

        let mut bad = single_pixel(&k, 60, 50, f64::NAN);
        bad.depth[0] = -1.0;
        assert!(depth_to_cloud(&bad, &k, PointClass::Traversable, 1)
            .unwrap()
            .is_empty());

        let small = DepthImage::new(3, 3, 0.0, vec![1.0; 9]).unwrap();
        assert!(depth_to_cloud(&small, &k, PointClass::Obstacle, 1).is_err());
    }

    #[test]
    fn stride_subsamples_lattice() {
        let k = CameraIntrinsics::new(10.0, 10.0, 4.0, 4.0, 8, 8).unwrap();
        let d = DepthImage::new(8, 8, 0.0, vec![1.0; 64]).unwrap();
        assert_eq!(
            depth_to_cloud(&d, &k, PointClass::Obstacle, 4)
                .unwrap()
                .len(),
            4
        );
        assert_eq!(
            depth_to_cloud(&d, &k, PointClass::Obstacle, 1)
                .unwrap()
                .len(),
            64
        );
        assert_eq!(
            depth_to_cloud_within(&d, &k, PointClass::Obstacle, 1, 0.5)
                .unwrap()
                .len(),
            0
        );
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 1.0, 1.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 4.0, 1.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 3.9, 0.0, 4, 4).is_ok());
    }

    fn cloud(frame: Frame, pts: &[[f64; 3]]) -> LabeledCloud {
        LabeledCloud {
            stamp: 0.0,
            frame,
            points: pts
                .iter()
                .map(|p| LabeledPoint {
                    x: p[0],
                    y: p[1],
                    z: p[2],
                    class: PointClass::Obstacle,
                })
                .collect(),
        }
    }

    #[test]
    fn identity_mount_only_permutes_axes() {
        let c = cloud(Frame::Camera, &[[1.0, 2.0, 3.0]]);
        let w = transform_cloud(&c, &CameraMount::default(), &Pose2D::default()).unwrap();
        assert_eq!(w.frame, Frame::World);
        let p = w.points[0];
        assert_abs_diff_eq!(p.x, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.z, -2.0, epsilon = 1e-12);
    }

    #[test]
    fn robot_translation_example() {
        let c = cloud(Frame::Robot, &[[1.0, 0.0, 0.1]]);
        let w = robot_to_world(&c, &Pose2D::new(5.0, 0.0, 0.0)).unwrap();
        assert_eq!(w.points[0].xyz(), [6.0, 0.0, 0.1]);
    }

    #[test]
    fn robot_rotation_matches_matrix_oracle() {
        let pose = Pose2D::new(0.0, 0.0, FRAC_PI_2);
        let c = cloud(Frame::Robot, &[[1.0, 0.0, 0.1]]);
        let w = robot_to_world(&c, &pose).unwrap().points[0];
        let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Vector3::z_axis(), pose.theta);
        let oracle = rot * nalgebra::Vector3::new(1.0, 0.0, 0.1);
        assert_abs_diff_eq!(w.x, oracle.x, epsilon = 1e-12);
        assert_abs_diff_eq!(w.y, oracle.y, epsilon = 1e-12);
        assert_abs_diff_eq!(w.z, oracle.z, epsilon = 1e-12);
        assert_abs_diff_eq!(w.y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pitched_mount_matches_matrix_oracle() {
        let mount = CameraMount {
            position: [0.2, -0.1, 0.6],
            pitch: 0.35,
            yaw: -0.4,
        };
        let p = [0.3, -0.2, 2.5];
        let got = mount.camera_to_robot(p);
        use nalgebra::{Matrix3, Rotation3, Vector3};
        let optical_to_body = Matrix3::new(0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0);
        let r = Rotation3::from_axis_angle(&Vector3::z_axis(), mount.yaw).matrix()
            * Rotation3::from_axis_angle(&Vector3::y_axis(), mount.pitch).matrix()
            * optical_to_body;
        let oracle = r * Vector3::new(p[0], p[1], p[2]) + Vector3::new(0.2, -0.1, 0.6);
        for i in 0..3 {
            assert_abs_diff_eq!(got[i], oracle[i], epsilon = 1e-12);
        }
        // Optical axis tilts downward for positive pitch.
        assert!(mount.rotate([0.0, 0.0, 1.0])[2] < 0.0);
    }

    #[test]
    fn wrong_frame_is_rejected() {
        let c = cloud(Frame::World, &[[0.0, 0.0, 1.0]]);
        assert!(matches!(
            transform_cloud(&c, &CameraMount::default(), &Pose2D::default()),
            Err(PerceptionError::WrongFrame { .. })
        ));
        assert!(robot_to_world(&cloud(Frame::Camera, &[]), &Pose2D::default()).is_err());
    }

    #[test]
    fn pgm_serialization() {
        let d = DepthImage::new(2, 1, 1.5, vec![1.2345, 0.0]).unwrap();
        let mut buf = Vec::new();
        d.write_pgm(&mut buf).unwrap();
        let back = DepthImage::read_pgm(&buf[..], 1.5).unwrap();
        assert_eq!(back.depth, vec![1.235, 0.0]);

        let m = SegMask::new(
            3,
            1,
            0.0,
            vec![
                SegClass::DontCare,
                SegClass::Obstacle,
                SegClass::Traversable,
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_pgm(&mut buf).unwrap();
        assert_eq!(&buf[buf.len() - 3..], &[0, 1, 2]);
        assert_eq!(SegMask::read_pgm(&buf[..], 0.0).unwrap(), m);
        assert!(SegMask::read_pgm(&b"P5\n1 1\n255\n\x07"[..], 0.0).is_err());
    }
}
