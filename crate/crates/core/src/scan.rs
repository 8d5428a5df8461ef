//! Planar laser scan message.

use serde::{Deserialize, Serialize};

/// One sweep of a 2D range sensor.
///
/// Beam `i` points at `angle_min + i * angle_increment()` relative to the
/// sensor heading, covering `[angle_min, angle_max)`. A range equal to
/// `max_range` means "no return".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeScan {
    pub stamp: f64,
    pub angle_min: f64,
    pub angle_max: f64,
    pub max_range: f64,
    pub ranges: Vec<f64>,
}

impl RangeScan {
    pub fn n_beams(&self) -> usize {
        self.ranges.len()
    }

    pub fn angle_increment(&self) -> f64 {
        if self.ranges.is_empty() {
            0.0
        } else {
            (self.angle_max - self.angle_min) / self.ranges.len() as f64
        }
    }

    pub fn beam_angle(&self, i: usize) -> f64 {
        self.angle_min + i as f64 * self.angle_increment()
    }

    pub fn is_return(&self, i: usize) -> bool {
        self.ranges[i] < self.max_range
    }
}
