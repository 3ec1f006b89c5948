//! Dead-reckoning pose estimate.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Planar pose with heading wrapped into `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OdomPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl OdomPose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: wrap_angle(theta) }
    }

    /// Expresses a world point in this pose's body frame.
    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let (dx, dy) = (x - self.x, y - self.y);
        (c * dx + s * dy, -s * dx + c * dy)
    }

    /// Maps a body-frame point into the frame this pose is expressed in.
    pub fn to_world(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (self.x + c * x - s * y, self.y + s * x + c * y)
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (x - self.x).hypot(y - self.y)
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    if w <= -PI {
        w += 2.0 * PI;
    }
    w
}

/// Exact unicycle update for constant `v`, `w` over `dt`.
pub fn integrate(pose: &OdomPose, v: f64, w: f64, dt: f64) -> OdomPose {
    debug_assert!(dt > 0.0);
    let th = pose.theta;
    let (x, y) = if w.abs() < 1e-9 {
        (pose.x + v * dt * th.cos(), pose.y + v * dt * th.sin())
    } else {
        // (v/w)(sin(th + w dt) - sin th) rewritten as a chord to avoid
        // cancellation when w dt is small.
        let half = 0.5 * w * dt;
        let chord = v * dt * half.sin() / half;
        let mid = th + half;
        (pose.x + chord * mid.cos(), pose.y + chord * mid.sin())
    };
    OdomPose { x, y, theta: wrap_angle(th + w * dt) }
}

/// Incremental motion over one tick: arc length and heading change.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoseDelta {
    pub distance: f64,
    pub rotation: f64,
}

/// Random-walk odometry error. Variances grow linearly with the distance
/// travelled and the angle turned, so the accumulated error does not depend
/// on how finely motion is sliced into ticks.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OdomNoise {
    /// Translational std-dev after one meter (m).
    pub trans_per_m: f64,
    /// Rotational std-dev after one radian turned (rad).
    pub rot_per_rad: f64,
    /// Heading std-dev after one meter travelled (rad).
    #[serde(default)]
    pub rot_per_m: f64,
}

impl OdomNoise {
    pub fn is_zero(&self) -> bool {
        self.trans_per_m == 0.0 && self.rot_per_rad == 0.0 && self.rot_per_m == 0.0
    }
}

pub fn add_noise<R: Rng + ?Sized>(delta: PoseDelta, noise: &OdomNoise, rng: &mut R) -> PoseDelta {
    if noise.is_zero() {
        return delta;
    }
    let ds = delta.distance.abs();
    let dr = delta.rotation.abs();
    let trans_sd = noise.trans_per_m * ds.sqrt();
    let rot_sd = (noise.rot_per_rad.powi(2) * dr + noise.rot_per_m.powi(2) * ds).sqrt();
    PoseDelta {
        distance: delta.distance + gaussian(rng, trans_sd),
        rotation: delta.rotation + gaussian(rng, rot_sd),
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> f64 {
    if sd > 0.0 {
        Normal::new(0.0, sd).expect("finite std-dev").sample(rng)
    } else {
        0.0
    }
}

/// Odometry integrator fed with the motion actually performed by the base.
#[derive(Debug, Clone)]
pub struct Odometry {
    pose: OdomPose,
    noise: OdomNoise,
    rng: ChaCha8Rng,
}

impl Odometry {
    pub fn new(start: OdomPose, noise: OdomNoise, seed: u64) -> Self {
        Self { pose: start, noise, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn pose(&self) -> OdomPose {
        self.pose
    }

    pub fn reset(&mut self, pose: OdomPose) {
        self.pose = pose;
    }

    /// Accumulates one tick of motion with speeds `v`, `w`.
    pub fn update(&mut self, v: f64, w: f64, dt: f64) {
        let measured = add_noise(PoseDelta { distance: v * dt, rotation: w * dt }, &self.noise, &mut self.rng);
        self.pose = integrate(&self.pose, measured.distance / dt, measured.rotation / dt, dt);
    }
}
