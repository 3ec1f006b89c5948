use std::f64::consts::TAU;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::World;
use crate::odom::OdomPose;
use crate::reactnav::LaserScan;

/// Planar scanner mounted at the robot center, facing forward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarConfig {
    pub n_beams: usize,
    pub fov: f64,
    pub max_range: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self { n_beams: 360, fov: TAU, max_range: 6.0 }
    }
}

/// Beam `i` points at bearing `-fov/2 + i * fov/n` relative to the heading.
pub fn raycast_lidar(world: &World, pose: &OdomPose, cfg: &LidarConfig) -> LaserScan {
    assert!(cfg.n_beams >= 1, "lidar needs at least one beam");
    let angle_min = -0.5 * cfg.fov;
    let angle_increment = cfg.fov / cfg.n_beams as f64;
    let origin = Vector2::new(pose.x, pose.y);
    let ranges = (0..cfg.n_beams)
        .map(|i| {
            let (s, c) = (pose.theta + angle_min + angle_increment * i as f64).sin_cos();
            let dir = Vector2::new(c, s);
            let hit = world
                .obstacles
                .iter()
                .filter_map(|seg| seg.ray_hit(&origin, &dir))
                .fold(f64::INFINITY, f64::min);
            if hit > 0.0 && hit <= cfg.max_range {
                hit
            } else {
                f64::INFINITY
            }
        })
        .collect();
    LaserScan { angle_min, angle_increment, ranges, max_range: cfg.max_range, timestamp: 0.0 }
}
