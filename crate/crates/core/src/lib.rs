//! Layered local costmap with vision-driven clearing of traversable terrain.
//!
//! A 2D LiDAR cannot tell tall grass from a wall, so the obstacle and voxel
//! layers mark it lethal. A semantic segmentation of the camera image,
//! projected through the depth image into a labeled point cloud, lets the
//! clearing layer set those cells back to free before inflation runs.
//!
//! The crate also contains a deterministic simulator ([`simworld`],
//! [`navsim`]) and a grid planner ([`planner`]) used to measure the effect.

// Range checks are written `!(x > 0.0)` so that NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod grid;
pub mod layers;
pub mod navsim;
pub mod netpbm;
pub mod perception;
pub mod planner;
pub mod scan;
pub mod simworld;
pub mod sync;

pub use grid::{
    normalize_angle, roll_window, CellIndex, CostGrid, GridError, Point2, Pose2D, RollingWindow,
    FREE, INSCRIBED, LETHAL, MAX_INFLATED, UNKNOWN,
};
pub use layers::{stack_update, LayerInputs, LayerKind, LayerStack, StackConfig};
pub use navsim::{
    compare, run, run_with_observer, NavError, Outcome, RunMetrics, Scenario, TickReport,
    TimingSummary,
};
pub use perception::{
    depth_to_cloud, mask_depth, transform_cloud, CameraIntrinsics, CameraMount, DepthImage, Frame,
    LabeledCloud, LabeledPoint, PointClass, SegClass, SegMask, Segmenter,
};
pub use planner::{plan, plan_toward, Path, PlanError, PlannerConfig};
pub use scan::RangeScan;
pub use simworld::{CameraSpec, LidarSpec, Region, RegionClass, Shape, WorldModel};
pub use sync::{SyncConfig, Synchronizer};
