//! Map-free reactive navigation in trajectory-parameter space.
//!
//! Candidate motions form one family of circular arcs indexed by `alpha`.
//! Each lidar scan is turned into the free arc length along every candidate
//! (the TP-space obstacle image), the goal is mapped onto the same parameter,
//! and a scoring rule picks the arc to follow for the next control period.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::odom::OdomPose;

/// Below this curvature an arc is treated as a straight segment.
const STRAIGHT_KAPPA: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserScan {
    pub angle_min: f64,
    pub angle_increment: f64,
    /// Ranges in meters; `f64::INFINITY` marks a beam with no return.
    pub ranges: Vec<f64>,
    pub max_range: f64,
    #[serde(default)]
    pub timestamp: f64,
}

impl LaserScan {
    pub fn bearing(&self, i: usize) -> f64 {
        self.angle_min + self.angle_increment * i as f64
    }

    pub fn is_return(&self, i: usize) -> bool {
        let r = self.ranges[i];
        r.is_finite() && r > 0.0 && r <= self.max_range
    }

    /// Returned points in the sensor frame.
    pub fn points(&self) -> Vec<(f64, f64)> {
        (0..self.ranges.len())
            .filter(|&i| self.is_return(i))
            .map(|i| {
                let (s, c) = self.bearing(i).sin_cos();
                (self.ranges[i] * c, self.ranges[i] * s)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotShape {
    pub radius: f64,
}

impl Default for RobotShape {
    fn default() -> Self {
        Self { radius: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityCmd {
    pub v: f64,
    pub w: f64,
}

impl VelocityCmd {
    pub const ZERO: VelocityCmd = VelocityCmd { v: 0.0, w: 0.0 };

    pub fn new(v: f64, w: f64) -> Self {
        Self { v, w }
    }
}

/// Destination in the odometry frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavGoal {
    pub x: f64,
    pub y: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavConfig {
    pub v_max: f64,
    pub w_max: f64,
    pub a_max: f64,
    pub lookahead: f64,
    pub n_alpha: usize,
    pub tolerance: f64,
    pub w_goal: f64,
    pub w_clear: f64,
    pub w_free: f64,
    pub safety_fraction: f64,
    /// Free fraction below which speed ramps down linearly.
    pub slow_below: f64,
    /// Extra clearance added to the footprint when building TP obstacles.
    pub safety_margin: f64,
    /// Half-width, in grid cells, of the window used for the clearance term.
    pub clearance_window: usize,
    pub control_period: f64,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            v_max: 0.6,
            w_max: 1.5,
            a_max: 1.0,
            lookahead: 2.0,
            n_alpha: 61,
            tolerance: 0.10,
            w_goal: 0.6,
            w_clear: 0.2,
            w_free: 0.2,
            safety_fraction: 0.15,
            slow_below: 0.5,
            safety_margin: 0.05,
            clearance_window: 3,
            control_period: 0.05,
        }
    }
}

impl NavConfig {
    pub fn from_json(text: &str) -> Result<Self, crate::config::ConfigError> {
        let cfg: NavConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), crate::config::ConfigError> {
        use crate::config::ConfigError::Invalid;
        let positive = [
            ("v_max", self.v_max),
            ("w_max", self.w_max),
            ("a_max", self.a_max),
            ("lookahead", self.lookahead),
            ("tolerance", self.tolerance),
            ("control_period", self.control_period),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Invalid(format!("{name} must be positive")));
            }
        }
        if self.n_alpha < 3 {
            return Err(Invalid("n_alpha must be at least 3".into()));
        }
        if !(0.0..1.0).contains(&self.safety_fraction) {
            return Err(Invalid("safety_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Grid of arc parameters: cell centers spanning `(-pi, pi)`.
    pub fn alpha_grid(&self) -> Vec<f64> {
        let n = self.n_alpha as f64;
        (0..self.n_alpha).map(|i| -PI + (i as f64 + 0.5) * TAU / n).collect()
    }
}

/// Curvature of the arc with parameter `alpha`: `(2/L) tan(alpha/2)`.
pub fn arc_for_alpha(alpha: f64, lookahead: f64) -> f64 {
    2.0 / lookahead * (0.5 * alpha).tan()
}

/// Inverse of [`arc_for_alpha`].
pub fn alpha_for_curvature(kappa: f64, lookahead: f64) -> f64 {
    2.0 * (0.5 * kappa * lookahead).atan()
}

/// Arc length at which a disc of `radius`, swept along the arc of curvature
/// `kappa` starting at the origin heading +X, first touches `point`.
/// `None` when it never does within one revolution or along the whole ray.
pub fn arc_contact_distance(kappa: f64, radius: f64, point: (f64, f64)) -> Option<f64> {
    let (px, py) = point;
    if px * px + py * py <= radius * radius {
        return Some(0.0);
    }
    if kappa.abs() < STRAIGHT_KAPPA {
        if py.abs() >= radius {
            return None;
        }
        let s = px - (radius * radius - py * py).sqrt();
        return (s >= 0.0).then_some(s);
    }
    // Mirror right turns onto left turns.
    let py = if kappa > 0.0 { py } else { -py };
    let rho = 1.0 / kappa.abs();
    let (dx, dy) = (px, py - rho);
    let dist = dx.hypot(dy);
    if (dist - rho).abs() >= radius {
        return None;
    }
    let cos_half = ((rho * rho + dist * dist - radius * radius) / (2.0 * rho * dist)).clamp(-1.0, 1.0);
    let half = cos_half.acos();
    // Turning angle at which the robot is closest to the point.
    let closest = (dy.atan2(dx) + FRAC_PI_2).rem_euclid(TAU);
    let first = (closest - half).rem_euclid(TAU);
    Some(first * rho)
}

/// Free arc length along `kappa` against all `points`, capped at `limit`.
pub fn arc_free_distance(kappa: f64, radius: f64, points: &[(f64, f64)], limit: f64) -> f64 {
    points
        .iter()
        .filter_map(|&p| arc_contact_distance(kappa, radius, p))
        .fold(limit, f64::min)
}

/// Normalized free distance per arc parameter; 1 means free to full lookahead.
#[derive(Debug, Clone, PartialEq)]
pub struct TpObstacles {
    pub alphas: Vec<f64>,
    pub free: Vec<f64>,
}

impl TpObstacles {
    pub fn len(&self) -> usize {
        self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.free.is_empty()
    }

    /// Minimum free fraction within `window` cells on either side.
    pub fn clearance(&self, i: usize, window: usize) -> f64 {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(self.free.len() - 1);
        self.free[lo..=hi].iter().copied().fold(1.0, f64::min)
    }
}

pub fn scan_to_tp(scan: &LaserScan, shape: &RobotShape, cfg: &NavConfig) -> TpObstacles {
    points_to_tp(&scan.points(), shape.radius + cfg.safety_margin, cfg)
}

pub fn points_to_tp(points: &[(f64, f64)], radius: f64, cfg: &NavConfig) -> TpObstacles {
    let alphas = cfg.alpha_grid();
    let free = alphas
        .iter()
        .map(|&a| {
            let kappa = arc_for_alpha(a, cfg.lookahead);
            (arc_free_distance(kappa, radius, points, cfg.lookahead) / cfg.lookahead).clamp(0.0, 1.0)
        })
        .collect();
    TpObstacles { alphas, free }
}

/// Goal image in TP space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalTp {
    pub alpha: f64,
    /// Arc length to the goal over the lookahead, clamped to 1.
    pub distance: f64,
}

/// Maps a robot-frame goal onto the arc family.
///
/// Goals ahead use the arc that passes through them. Goals behind the robot
/// map to a turn at least as sharp as their bearing, so `|alpha| > pi/2`.
pub fn goal_to_tp(x: f64, y: f64, lookahead: f64) -> GoalTp {
    let r = x.hypot(y);
    if r < 1e-12 {
        return GoalTp { alpha: 0.0, distance: 0.0 };
    }
    let bearing = y.atan2(x);
    if bearing.abs() <= FRAC_PI_2 {
        let kappa = 2.0 * bearing.sin() / r;
        let arc = if bearing.abs() < 1e-12 { r } else { r * bearing / bearing.sin() };
        GoalTp {
            alpha: alpha_for_curvature(kappa, lookahead),
            distance: (arc / lookahead).min(1.0),
        }
    } else {
        let at_side = alpha_for_curvature(2.0 / r, lookahead);
        let sign = if bearing >= 0.0 { 1.0 } else { -1.0 };
        GoalTp { alpha: sign * at_side.max(bearing.abs()), distance: 1.0 }
    }
}

/// Largest speed whose one-period travel plus braking distance fits in `free`.
pub fn braking_speed_limit(free: f64, period: f64, a_max: f64) -> f64 {
    if free <= 0.0 {
        return 0.0;
    }
    a_max * (-period + (period * period + 2.0 * free / a_max).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotionChoice {
    Move { cmd: VelocityCmd, alpha_index: usize },
    Blocked,
}

/// Scores every admissible arc and converts the winner into a velocity.
///
/// Ties go to the smaller `|alpha|`, then to the negative side.
pub fn choose_motion(tp: &TpObstacles, goal: &GoalTp, cfg: &NavConfig) -> MotionChoice {
    let mut best: Option<(usize, f64)> = None;
    for (i, (&alpha, &free)) in tp.alphas.iter().zip(&tp.free).enumerate() {
        if free <= cfg.safety_fraction {
            continue;
        }
        let score = cfg.w_goal * (1.0 - (alpha - goal.alpha).abs() / PI)
            + cfg.w_clear * tp.clearance(i, cfg.clearance_window)
            + cfg.w_free * free;
        let better = match best {
            None => true,
            Some((j, s)) => {
                score > s
                    || (score == s
                        && (alpha.abs() < tp.alphas[j].abs()
                            || (alpha.abs() == tp.alphas[j].abs() && alpha < tp.alphas[j])))
            }
        };
        if better {
            best = Some((i, score));
        }
    }
    let Some((i, _)) = best else {
        return MotionChoice::Blocked;
    };
    let free = tp.free[i];
    let kappa = arc_for_alpha(tp.alphas[i], cfg.lookahead);
    let slow = (free / cfg.slow_below).min(1.0);
    let mut v = cfg.v_max * free * slow;
    v = v.min(braking_speed_limit(free * cfg.lookahead, cfg.control_period, cfg.a_max));
    if kappa.abs() > 0.0 {
        v = v.min(cfg.w_max / kappa.abs());
    }
    MotionChoice::Move { cmd: VelocityCmd { v, w: v * kappa }, alpha_index: i }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NavOutput {
    Move(VelocityCmd),
    Arrived,
    Blocked,
}

impl NavOutput {
    pub fn command(&self) -> VelocityCmd {
        match self {
            NavOutput::Move(c) => *c,
            NavOutput::Arrived | NavOutput::Blocked => VelocityCmd::ZERO,
        }
    }
}

/// Navigator state: one goal at a time, owned by a single control loop.
#[derive(Debug, Clone)]
pub struct ReactiveNavigator {
    pub cfg: NavConfig,
    pub shape: RobotShape,
    goal: Option<NavGoal>,
    arrived: bool,
    /// Direction of an ongoing sharp turn (+1 left, -1 right).
    turning: Option<f64>,
}

impl ReactiveNavigator {
    pub fn new(cfg: NavConfig, shape: RobotShape) -> Self {
        Self { cfg, shape, goal: None, arrived: false, turning: None }
    }

    pub fn goal(&self) -> Option<NavGoal> {
        self.goal
    }

    pub fn set_goal(&mut self, x: f64, y: f64) {
        self.goal = Some(NavGoal { x, y, tolerance: self.cfg.tolerance });
        self.arrived = false;
        self.turning = None;
    }

    pub fn clear_goal(&mut self) {
        self.goal = None;
        self.arrived = false;
        self.turning = None;
    }

    pub fn has_arrived(&self) -> bool {
        self.arrived
    }

    /// One control cycle. Without a goal the robot is commanded to stand still
    /// and reported as arrived.
    pub fn nav_step(&mut self, pose: &OdomPose, scan: &LaserScan) -> NavOutput {
        let Some(goal) = self.goal else {
            return NavOutput::Arrived;
        };
        if self.arrived || pose.distance_to(goal.x, goal.y) <= goal.tolerance {
            self.arrived = true;
            return NavOutput::Arrived;
        }
        let (gx, gy) = pose.to_local(goal.x, goal.y);
        let mut tp = scan_to_tp(scan, &self.shape, &self.cfg);
        let goal_tp = goal_to_tp(gx, gy, self.cfg.lookahead);
        // Once a sharp turn has started, finish it: the goal swings to the
        // other side while turning, and switching direction would dither.
        if let Some(sign) = self.turning {
            for (a, f) in tp.alphas.iter().zip(tp.free.iter_mut()) {
                if a.abs() > FRAC_PI_2 && a.signum() != sign {
                    *f = 0.0;
                }
            }
        }
        match choose_motion(&tp, &goal_tp, &self.cfg) {
            MotionChoice::Blocked => {
                self.turning = None;
                NavOutput::Blocked
            }
            MotionChoice::Move { mut cmd, alpha_index } => {
                let alpha = tp.alphas[alpha_index];
                self.turning = (alpha.abs() > FRAC_PI_2).then(|| alpha.signum());
                // Ease into the goal so the base can stop inside the tolerance.
                let approach = (self.cfg.a_max * gx.hypot(gy)).sqrt();
                if cmd.v > approach {
                    let scale = approach / cmd.v;
                    cmd.v *= scale;
                    cmd.w *= scale;
                }
                NavOutput::Move(cmd)
            }
        }
    }
}

/// Checks one command against the scan that produced it: following the
/// command's arc for one period plus the braking distance must keep the
/// footprint clear of every scan point.
pub fn command_is_safe(cmd: &VelocityCmd, scan: &LaserScan, shape: &RobotShape, cfg: &NavConfig) -> bool {
    let v = cmd.v.abs();
    if v == 0.0 {
        return scan.points().iter().all(|&(x, y)| x.hypot(y) > shape.radius);
    }
    let kappa = cmd.w / cmd.v;
    let needed = v * cfg.control_period + v * v / (2.0 * cfg.a_max);
    let pts: Vec<(f64, f64)> = if cmd.v < 0.0 {
        scan.points().into_iter().map(|(x, y)| (-x, y)).collect()
    } else {
        scan.points()
    };
    arc_free_distance(kappa, shape.radius, &pts, f64::INFINITY) > needed
}
