//! Headless trial harness: seeded closed-loop runs of the click-to-go
//! pipeline and of a scripted keyboard operator, plus the summary tables.

pub mod manual;
mod report;

pub use report::{
    aggregate, emit, format_comparison_csv, format_trials_csv, reports_heading, summarize, ComparisonRow, EmitError,
    SummaryError,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camgeom::{CameraModel, PixelPoint};
use crate::kinchain::{webot_chain, CameraRig, ChainConfig};
use crate::odom::{wrap_angle, OdomNoise, OdomPose};
use crate::reactnav::{command_is_safe, NavConfig, NavOutput, ReactiveNavigator, RobotShape};
use crate::simworld::{ScenarioSpec, Simulation};
use manual::{route_for, ScriptedOperator};

/// Start pose jitter: uniform within these bounds.
pub const JITTER_XY: f64 = 0.05;
pub const JITTER_THETA: f64 = 0.05;
/// Simulated time limit per trial (s).
pub const TRIAL_TIMEOUT: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controller {
    Auto,
    Manual,
}

impl Controller {
    pub fn name(&self) -> &'static str {
        match self {
            Controller::Auto => "auto",
            Controller::Manual => "manual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Arrived,
    Timeout,
    Collision,
    /// The target center was not visible, so no click could be made.
    NoClick,
}

impl TrialStatus {
    pub fn name(&self) -> &'static str {
        match self {
            TrialStatus::Arrived => "arrived",
            TrialStatus::Timeout => "timeout",
            TrialStatus::Collision => "collision",
            TrialStatus::NoClick => "no_click",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub index: usize,
    /// Final offset from the target center along the target's axes (cm).
    pub x_err: f64,
    pub y_err: f64,
    /// Final heading minus the target heading (rad).
    pub f_err: f64,
    /// Time until the robot stood still at its destination (s).
    pub t: f64,
    pub collided: bool,
    pub status: TrialStatus,
    /// Distance actually driven (m).
    pub path_length: f64,
    /// Commands that failed the forward-simulated clearance check.
    pub unsafe_commands: usize,
}

impl TrialResult {
    pub fn succeeded(&self) -> bool {
        self.status == TrialStatus::Arrived && !self.collided
    }
}

/// Everything that is fixed across the trials of one run.
#[derive(Debug, Clone)]
pub struct TrialSetup {
    pub camera: CameraModel,
    pub chain: ChainConfig,
    pub nav: NavConfig,
    pub shape: RobotShape,
    pub noise: OdomNoise,
    pub jitter: bool,
    pub timeout: f64,
}

impl Default for TrialSetup {
    fn default() -> Self {
        Self {
            camera: CameraModel::default(),
            chain: webot_chain(),
            nav: NavConfig::default(),
            shape: RobotShape::default(),
            noise: OdomNoise { trans_per_m: 0.01, rot_per_rad: 0.01, rot_per_m: 0.005 },
            jitter: true,
            timeout: TRIAL_TIMEOUT,
        }
    }
}

fn trial_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn start_pose(spec: &ScenarioSpec, setup: &TrialSetup, rng: &mut ChaCha8Rng) -> OdomPose {
    let s = spec.start_pose;
    if !setup.jitter {
        return s;
    }
    OdomPose::new(
        s.x + rng.gen_range(-JITTER_XY..=JITTER_XY),
        s.y + rng.gen_range(-JITTER_XY..=JITTER_XY),
        s.theta + rng.gen_range(-JITTER_THETA..=JITTER_THETA),
    )
}

/// Pixel a person would click: the target center as seen by the camera,
/// rounded to a whole pixel.
fn click_target(sim: &Simulation, spec: &ScenarioSpec, setup: &TrialSetup) -> Option<PixelPoint> {
    let rig = CameraRig::with_pan_tilt(setup.camera, &setup.chain, sim.robot.pan, sim.robot.tilt).ok()?;
    let [cx, cy] = spec.target.center;
    let (lx, ly) = sim.robot.pose.to_local(cx, cy);
    let px = rig.project_base(&nalgebra::Vector3::new(lx, ly, 0.0)).ok()?;
    let px = PixelPoint::new(px.u.round(), px.v.round());
    setup.camera.contains(px).then_some(px)
}

fn finish(index: usize, sim: &Simulation, spec: &ScenarioSpec, status: TrialStatus, t: f64, unsafe_commands: usize) -> TrialResult {
    let pose = sim.robot.pose;
    TrialResult {
        index,
        x_err: 100.0 * (pose.x - spec.target.center[0]),
        y_err: 100.0 * (pose.y - spec.target.center[1]),
        f_err: wrap_angle(pose.theta - spec.start_pose.theta),
        t,
        collided: sim.robot.collided,
        status,
        path_length: sim.path_length,
        unsafe_commands,
    }
}

fn at_rest(sim: &Simulation) -> bool {
    sim.robot.v == 0.0 && sim.robot.w == 0.0
}

fn run_auto(spec: &ScenarioSpec, setup: &TrialSetup, index: usize, seed: u64) -> TrialResult {
    let mut rng = trial_rng(seed, index);
    let start = start_pose(spec, setup, &mut rng);
    let mut sim = Simulation::new(spec.world.clone(), start, setup.shape, setup.noise, rng.gen());
    let goal = click_target(&sim, spec, setup).and_then(|px| {
        let rig = CameraRig::with_pan_tilt(setup.camera, &setup.chain, sim.robot.pan, sim.robot.tilt).ok()?;
        rig.pixel_to_ground(px).ok()
    });
    let Some(goal) = goal else {
        return finish(index, &sim, spec, TrialStatus::NoClick, sim.time(), 0);
    };
    let mut nav = ReactiveNavigator::new(setup.nav.clone(), setup.shape);
    let (gx, gy) = sim.odom_pose().to_world(goal.x, goal.y);
    nav.set_goal(gx, gy);

    let mut unsafe_commands = 0;
    while sim.time() < setup.timeout {
        let scan = sim.scan();
        let out = nav.nav_step(&sim.odom_pose(), &scan);
        let cmd = out.command();
        if !command_is_safe(&cmd, &scan, &setup.shape, &setup.nav) {
            unsafe_commands += 1;
        }
        if matches!(out, NavOutput::Arrived) && at_rest(&sim) {
            return finish(index, &sim, spec, TrialStatus::Arrived, sim.time(), unsafe_commands);
        }
        if sim.advance(cmd).collision {
            return finish(index, &sim, spec, TrialStatus::Collision, sim.time(), unsafe_commands);
        }
    }
    finish(index, &sim, spec, TrialStatus::Timeout, sim.time(), unsafe_commands)
}

fn run_manual(spec: &ScenarioSpec, setup: &TrialSetup, index: usize, seed: u64) -> TrialResult {
    let mut rng = trial_rng(seed, index);
    let start = start_pose(spec, setup, &mut rng);
    let mut sim = Simulation::new(spec.world.clone(), start, setup.shape, setup.noise, rng.gen());
    let mut op = ScriptedOperator::new(route_for(&spec.name, spec.target.center));
    while sim.time() < setup.timeout {
        let cmd = op.command(sim.tick, &sim.robot.pose, sim.robot.v);
        if op.finished() && at_rest(&sim) {
            return finish(index, &sim, spec, TrialStatus::Arrived, sim.time(), 0);
        }
        if sim.advance(cmd).collision {
            return finish(index, &sim, spec, TrialStatus::Collision, sim.time(), 0);
        }
    }
    finish(index, &sim, spec, TrialStatus::Timeout, sim.time(), 0)
}

/// One trial. Trial `index` under `seed` is reproducible on its own.
pub fn run_trial(spec: &ScenarioSpec, controller: Controller, setup: &TrialSetup, index: usize, seed: u64) -> TrialResult {
    match controller {
        Controller::Auto => run_auto(spec, setup, index, seed),
        Controller::Manual => run_manual(spec, setup, index, seed),
    }
}

/// `n` independent trials, run in parallel, returned in index order.
/// Indices start at 1 to match table row numbers.
pub fn run_trials(spec: &ScenarioSpec, controller: Controller, n: usize, seed: u64, setup: &TrialSetup) -> Vec<TrialResult> {
    let mut results: Vec<TrialResult> =
        (1..=n).into_par_iter().map(|i| run_trial(spec, controller, setup, i, seed)).collect();
    results.sort_by_key(|r| r.index);
    results
}

/// Pass/fail of the checks a run must satisfy before it is reported as good.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub failures: Vec<String>,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Minimum fraction of auto trials that must arrive.
pub const MIN_SUCCESS_RATE: f64 = 0.95;

pub fn check_invariants(scenario: &str, controller: Controller, results: &[TrialResult]) -> InvariantReport {
    let mut failures = Vec::new();
    if controller == Controller::Auto && !results.is_empty() {
        let collisions = results.iter().filter(|r| r.collided).count();
        if collisions > 0 {
            failures.push(format!("{scenario}: {collisions} auto trial(s) collided"));
        }
        let unsafe_cmds: usize = results.iter().map(|r| r.unsafe_commands).sum();
        if unsafe_cmds > 0 {
            failures.push(format!("{scenario}: {unsafe_cmds} unsafe navigator command(s)"));
        }
        let ok = results.iter().filter(|r| r.succeeded()).count();
        if (ok as f64) < MIN_SUCCESS_RATE * results.len() as f64 {
            failures.push(format!("{scenario}: only {ok}/{} auto trials arrived", results.len()));
        }
        if scenario == "block" {
            let short = results.iter().filter(|r| r.succeeded() && r.path_length <= 2.0).count();
            if short > 0 {
                failures.push(format!("{scenario}: {short} successful path(s) not longer than 2 m"));
            }
        }
    }
    InvariantReport { failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simworld::scenario;

    #[test]
    fn ideal_open_space_trial_stops_within_tolerance() {
        let spec = scenario("open_space").unwrap();
        let setup = TrialSetup { jitter: false, noise: OdomNoise::default(), ..Default::default() };
        let r = run_trial(&spec, Controller::Auto, &setup, 1, 0);
        assert_eq!(r.status, TrialStatus::Arrived);
        assert!(r.x_err.abs() <= 10.0 && r.y_err.abs() <= 10.0, "{r:?}");
        assert!(r.t > 0.0);
    }

    #[test]
    fn trials_are_reproducible_and_ordered() {
        let spec = scenario("open_space").unwrap();
        let setup = TrialSetup::default();
        let a = run_trials(&spec, Controller::Auto, 4, 7, &setup);
        let b = run_trials(&spec, Controller::Auto, 4, 7, &setup);
        assert_eq!(a, b);
        assert_eq!(a.iter().map(|r| r.index).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert_eq!(run_trial(&spec, Controller::Auto, &setup, 3, 7), a[2]);
    }

    #[test]
    fn jitter_stays_in_bounds() {
        let spec = scenario("open_space").unwrap();
        let setup = TrialSetup::default();
        for i in 0..200 {
            let p = start_pose(&spec, &setup, &mut trial_rng(3, i));
            assert!(p.x.abs() <= JITTER_XY && p.y.abs() <= JITTER_XY && p.theta.abs() <= JITTER_THETA);
        }
    }

    #[test]
    fn manual_baseline_reaches_open_space_target() {
        let spec = scenario("open_space").unwrap();
        let r = run_trial(&spec, Controller::Manual, &TrialSetup::default(), 1, 5);
        assert_eq!(r.status, TrialStatus::Arrived, "{r:?}");
        assert!(r.x_err.abs() < 30.0 && r.y_err.abs() < 30.0, "{r:?}");
    }

    #[test]
    fn block_trial_detours() {
        let spec = scenario("block").unwrap();
        let r = run_trial(&spec, Controller::Auto, &TrialSetup::default(), 1, 11);
        assert!(r.succeeded(), "{r:?}");
        assert!(r.path_length > 2.0);
    }

    #[test]
    fn invariants_flag_collisions() {
        let mut r = TrialResult {
            index: 1,
            x_err: 0.0,
            y_err: 0.0,
            f_err: 0.0,
            t: 1.0,
            collided: false,
            status: TrialStatus::Arrived,
            path_length: 2.0,
            unsafe_commands: 0,
        };
        assert!(check_invariants("open_space", Controller::Auto, std::slice::from_ref(&r)).passed());
        r.collided = true;
        r.status = TrialStatus::Collision;
        let rep = check_invariants("open_space", Controller::Auto, &[r.clone()]);
        assert_eq!(rep.failures.len(), 2);
        assert!(check_invariants("open_space", Controller::Manual, &[r]).passed());
    }
}
