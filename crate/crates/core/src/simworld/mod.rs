//! Deterministic 2D world with a differential-drive robot, a simulated lidar
//! and a synthetic camera.

mod lidar;
mod render;
mod scenario;

pub use lidar::{raycast_lidar, LidarConfig};
pub use render::{render_camera, RenderFrame, RenderOptions, WALL_HEIGHT};
pub use scenario::{scenario, ScenarioConfig, ScenarioError, ScenarioSpec, TargetZone, SCENARIO_NAMES};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::odom::{self, OdomNoise, OdomPose, Odometry};
use crate::reactnav::{LaserScan, RobotShape, VelocityCmd};

/// Physics, control and telemetry tick.
pub const TICK_DT: f64 = 0.05;
/// Frames are rendered every this many ticks.
pub const RENDER_EVERY: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vector2<f64>,
    pub b: Vector2<f64>,
}

impl Segment {
    pub fn new(ax: f64, ay: f64, bx: f64, by: f64) -> Self {
        Self { a: Vector2::new(ax, ay), b: Vector2::new(bx, by) }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    pub fn distance_to(&self, p: &Vector2<f64>) -> f64 {
        let ab = self.b - self.a;
        let len2 = ab.norm_squared();
        let t = if len2 > 0.0 { ((p - self.a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
        (self.a + ab * t - p).norm()
    }

    /// Ray parameter of the first hit of `origin + t * dir`, `t >= 0`.
    pub fn ray_hit(&self, origin: &Vector2<f64>, dir: &Vector2<f64>) -> Option<f64> {
        let s = self.b - self.a;
        let denom = cross(dir, &s);
        if denom.abs() < 1e-15 {
            return None;
        }
        let ao = self.a - origin;
        let t = cross(&ao, &s) / denom;
        let u = cross(&ao, dir) / denom;
        (t >= 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
    }
}

fn cross(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    pub fn is_valid(&self) -> bool {
        self.max_x > self.min_x && self.max_y > self.min_y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub obstacles: Vec<Segment>,
    pub bounds: Bounds,
}

impl World {
    pub fn clearance(&self, p: &Vector2<f64>) -> f64 {
        self.obstacles.iter().map(|s| s.distance_to(p)).fold(f64::INFINITY, f64::min)
    }
}

/// Acceleration and speed limits of the simulated base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantLimits {
    pub v_max: f64,
    pub w_max: f64,
    pub a_max: f64,
    pub alpha_max: f64,
}

impl Default for PlantLimits {
    fn default() -> Self {
        Self { v_max: 0.6, w_max: 1.5, a_max: 1.0, alpha_max: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRobot {
    pub pose: OdomPose,
    pub shape: RobotShape,
    pub pan: f64,
    pub tilt: f64,
    pub v: f64,
    pub w: f64,
    pub collided: bool,
}

impl SimRobot {
    pub const DEFAULT_TILT: f64 = -0.5;

    pub fn new(pose: OdomPose, shape: RobotShape) -> Self {
        Self { pose, shape, pan: 0.0, tilt: Self::DEFAULT_TILT, v: 0.0, w: 0.0, collided: false }
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.pose.x, self.pose.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepEvents {
    pub collision: bool,
    /// Mean speeds achieved over the tick.
    pub v: f64,
    pub w: f64,
    /// Distance actually travelled this tick.
    pub distance: f64,
}

fn slew(current: f64, target: f64, rate: f64) -> f64 {
    current + (target - current).clamp(-rate, rate)
}

/// Advances the plant by one tick. Speeds slew toward the (clamped) command;
/// the pose follows the exact arc at the tick's mean speeds. A collision
/// stops and freezes the robot.
pub fn step(world: &World, robot: &mut SimRobot, cmd: VelocityCmd, dt: f64, limits: &PlantLimits) -> StepEvents {
    debug_assert!(dt > 0.0 && dt <= 0.1);
    if robot.collided {
        robot.v = 0.0;
        robot.w = 0.0;
        return StepEvents { collision: true, ..Default::default() };
    }
    let target_v = cmd.v.clamp(-limits.v_max, limits.v_max);
    let target_w = cmd.w.clamp(-limits.w_max, limits.w_max);
    let v_new = slew(robot.v, target_v, limits.a_max * dt);
    let w_new = slew(robot.w, target_w, limits.alpha_max * dt);
    let v_mean = 0.5 * (robot.v + v_new);
    let w_mean = 0.5 * (robot.w + w_new);
    robot.pose = odom::integrate(&robot.pose, v_mean, w_mean, dt);
    robot.v = v_new;
    robot.w = w_new;
    let mut events = StepEvents { collision: false, v: v_mean, w: w_mean, distance: v_mean.abs() * dt };
    if world.clearance(&robot.position()) <= robot.shape.radius {
        robot.collided = true;
        robot.v = 0.0;
        robot.w = 0.0;
        events.collision = true;
    }
    events
}

/// One robot in one world, advanced tick by tick by a single owner.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub world: World,
    pub robot: SimRobot,
    pub odometry: Odometry,
    pub lidar: LidarConfig,
    pub limits: PlantLimits,
    pub tick: u64,
    pub dt: f64,
    pub path_length: f64,
}

impl Simulation {
    pub fn new(world: World, start: OdomPose, shape: RobotShape, noise: OdomNoise, seed: u64) -> Self {
        Self {
            world,
            robot: SimRobot::new(start, shape),
            odometry: Odometry::new(OdomPose::default(), noise, seed),
            lidar: LidarConfig::default(),
            limits: PlantLimits::default(),
            tick: 0,
            dt: TICK_DT,
            path_length: 0.0,
        }
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.dt
    }

    pub fn scan(&self) -> LaserScan {
        let mut scan = raycast_lidar(&self.world, &self.robot.pose, &self.lidar);
        scan.timestamp = self.time();
        scan
    }

    pub fn odom_pose(&self) -> OdomPose {
        self.odometry.pose()
    }

    pub fn advance(&mut self, cmd: VelocityCmd) -> StepEvents {
        let events = step(&self.world, &mut self.robot, cmd, self.dt, &self.limits);
        if !events.collision {
            self.odometry.update(events.v, events.w, self.dt);
        }
        self.path_length += events.distance;
        self.tick += 1;
        events
    }
}
