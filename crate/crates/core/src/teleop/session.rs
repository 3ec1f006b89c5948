use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use crate::camgeom::{CameraModel, PixelPoint};
use crate::kinchain::{CameraRig, ChainConfig};
use crate::odom::{OdomNoise, OdomPose};
use crate::reactnav::{NavConfig, NavOutput, ReactiveNavigator, RobotShape, VelocityCmd};
use crate::simworld::{render_camera, scenario, RenderFrame, RenderOptions, ScenarioSpec, Simulation, RENDER_EVERY};

use super::protocol::{ClientCommand, CommandError, ErrorCode, GoalPoint, NavStatus, StateEvent};

/// Static configuration of a control session.
#[derive(Debug, Clone, Default)]
pub struct SessionConfig {
    pub camera: CameraModel,
    pub chain: ChainConfig,
    pub nav: NavConfig,
    pub shape: RobotShape,
    pub noise: OdomNoise,
    pub seed: u64,
}

/// A rendered frame together with the odometry pose at render time, so a
/// click on it maps through the geometry the operator saw.
#[derive(Debug, Clone)]
pub struct FrameSnapshot {
    pub frame: Arc<RenderFrame>,
    pub odom_pose: OdomPose,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Idle,
    Manual(VelocityCmd),
    Navigating,
}

/// What one tick produced.
#[derive(Debug, Clone)]
pub struct TickOutput {
    pub state: StateEvent,
    pub frame: Option<FrameSnapshot>,
}

/// Simulation plus navigator, advanced one tick at a time by a single owner.
#[derive(Debug)]
pub struct TeleopSession {
    cfg: SessionConfig,
    spec: ScenarioSpec,
    sim: Simulation,
    nav: ReactiveNavigator,
    mode: Mode,
    status: NavStatus,
    tick: u64,
    next_seq: u64,
    last_frame: FrameSnapshot,
}

impl TeleopSession {
    pub fn new(cfg: SessionConfig, spec: ScenarioSpec) -> Self {
        let sim = Simulation::new(spec.world.clone(), spec.start_pose, cfg.shape, cfg.noise, cfg.seed);
        let nav = ReactiveNavigator::new(cfg.nav.clone(), cfg.shape);
        let mut session = Self {
            last_frame: FrameSnapshot { frame: Arc::new(blank_frame(&cfg.camera)), odom_pose: OdomPose::default() },
            cfg,
            spec,
            sim,
            nav,
            mode: Mode::Idle,
            status: NavStatus::Idle,
            tick: 0,
            next_seq: 0,
        };
        session.render();
        session
    }

    pub fn scenario(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn last_frame(&self) -> &FrameSnapshot {
        &self.last_frame
    }

    pub fn nav_status(&self) -> NavStatus {
        self.status
    }

    pub fn state(&self) -> StateEvent {
        StateEvent {
            tick: self.tick,
            pose: self.sim.odom_pose(),
            goal: self.nav.goal().filter(|_| self.mode == Mode::Navigating).map(|g| GoalPoint { x: g.x, y: g.y }),
            nav_status: self.status,
            collision: self.sim.robot.collided,
            true_pose: Some(self.sim.robot.pose),
        }
    }

    fn render(&mut self) -> FrameSnapshot {
        let opts = RenderOptions { target: Some(self.spec.target), ..Default::default() };
        let frame = render_camera(&self.sim.world, &self.sim.robot, &self.cfg.camera, &self.cfg.chain, &opts, self.next_seq)
            .unwrap_or_else(|_| RenderFrame { seq: self.next_seq, ..blank_frame(&self.cfg.camera) });
        self.next_seq += 1;
        self.last_frame = FrameSnapshot { frame: Arc::new(frame), odom_pose: self.sim.odom_pose() };
        self.last_frame.clone()
    }

    /// Odometry-frame floor point under a pixel of the last rendered frame.
    pub fn click_to_goal(&self, u: f64, v: f64) -> Result<GoalPoint, CommandError> {
        let snap = &self.last_frame;
        let rig = CameraRig::new(self.cfg.camera, &self.cfg.chain, snap.frame.joints.clone())?;
        let ground = rig.pixel_to_ground(PixelPoint::new(u, v))?;
        let (x, y) = snap.odom_pose.to_world(ground.x, ground.y);
        Ok(GoalPoint { x, y })
    }

    /// Applies one command. Errors leave the session unchanged.
    pub fn apply(&mut self, cmd: &ClientCommand) -> Result<(), CommandError> {
        cmd.validate()?;
        match cmd {
            ClientCommand::Goto { u, v } => {
                let goal = self.click_to_goal(*u, *v)?;
                self.nav.set_goal(goal.x, goal.y);
                self.mode = Mode::Navigating;
                self.status = NavStatus::Navigating;
            }
            ClientCommand::Velocity { v, w } => {
                self.nav.clear_goal();
                self.mode = Mode::Manual(VelocityCmd::new(*v, *w));
                self.status = NavStatus::Idle;
            }
            ClientCommand::Stop => {
                self.nav.clear_goal();
                self.mode = Mode::Idle;
                self.status = NavStatus::Idle;
            }
            ClientCommand::SetCamera { tilt, pan } => {
                if tilt.abs() > FRAC_PI_2 || pan.abs() > PI {
                    return Err(CommandError::new(
                        ErrorCode::InvalidCommand,
                        "tilt must lie in [-pi/2, pi/2] and pan in [-pi, pi]",
                    ));
                }
                self.sim.robot.tilt = *tilt;
                self.sim.robot.pan = *pan;
            }
            ClientCommand::LoadScenario { name } => {
                let spec = scenario(name).map_err(|e| CommandError::new(ErrorCode::UnknownScenario, e.to_string()))?;
                let (pan, tilt) = (self.sim.robot.pan, self.sim.robot.tilt);
                self.sim = Simulation::new(spec.world.clone(), spec.start_pose, self.cfg.shape, self.cfg.noise, self.cfg.seed);
                self.sim.robot.pan = pan;
                self.sim.robot.tilt = tilt;
                self.spec = spec;
                self.nav.clear_goal();
                self.mode = Mode::Idle;
                self.status = NavStatus::Idle;
                self.render();
            }
        }
        Ok(())
    }

    /// Navigation, one physics step and, every few ticks, a new frame.
    pub fn tick(&mut self) -> TickOutput {
        let cmd = match self.mode {
            Mode::Idle => VelocityCmd::ZERO,
            Mode::Manual(cmd) => cmd,
            Mode::Navigating => {
                let out = self.nav.nav_step(&self.sim.odom_pose(), &self.sim.scan());
                self.status = match out {
                    NavOutput::Move(_) => NavStatus::Navigating,
                    NavOutput::Arrived => NavStatus::Arrived,
                    NavOutput::Blocked => NavStatus::Blocked,
                };
                out.command()
            }
        };
        self.sim.advance(cmd);
        self.tick += 1;
        let frame = self.tick.is_multiple_of(RENDER_EVERY).then(|| self.render());
        TickOutput { state: self.state(), frame }
    }
}

fn blank_frame(model: &CameraModel) -> RenderFrame {
    RenderFrame {
        width: model.width,
        height: model.height,
        pixels: vec![0; model.width as usize * model.height as usize * 3],
        seq: 0,
        joints: crate::kinchain::JointState::new(vec![]),
        pan: 0.0,
        tilt: 0.0,
        pose: OdomPose::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn session(name: &str) -> TeleopSession {
        TeleopSession::new(SessionConfig::default(), scenario(name).unwrap())
    }

    fn target_pixel(s: &TeleopSession) -> (f64, f64) {
        let f = &s.last_frame().frame;
        let rig = CameraRig::new(s.cfg.camera, &s.cfg.chain, f.joints.clone()).unwrap();
        let [cx, cy] = s.scenario().target.center;
        let (lx, ly) = f.pose.to_local(cx, cy);
        let px = rig.project_base(&Vector3::new(lx, ly, 0.0)).unwrap();
        (px.u.round(), px.v.round())
    }

    #[test]
    fn goto_target_arrives() {
        let mut s = session("open_space");
        let (u, v) = target_pixel(&s);
        s.apply(&ClientCommand::Goto { u, v }).unwrap();
        assert_eq!(s.nav_status(), NavStatus::Navigating);
        let mut seen_nav = false;
        for _ in 0..600 {
            let out = s.tick();
            seen_nav |= out.state.nav_status == NavStatus::Navigating;
            if out.state.nav_status == NavStatus::Arrived {
                break;
            }
        }
        assert!(seen_nav);
        assert_eq!(s.nav_status(), NavStatus::Arrived);
        let p = s.simulation().robot.pose;
        assert!(p.distance_to(2.0, 0.0) < 0.15, "{p:?}");
    }

    #[test]
    fn goto_above_horizon_is_rejected() {
        let mut s = session("open_space");
        s.apply(&ClientCommand::SetCamera { tilt: 0.0, pan: 0.0 }).unwrap();
        while s.tick().frame.is_none() {}
        let before = s.state();
        let err = s.apply(&ClientCommand::Goto { u: 319.0, v: 0.0 }).unwrap_err();
        assert_eq!(err.code, ErrorCode::AboveHorizon);
        assert_eq!(s.state(), before);
    }

    #[test]
    fn bottom_center_click_is_just_ahead() {
        let s = session("open_space");
        let g = s.click_to_goal(s.cfg.camera.cx, (s.cfg.camera.height - 1) as f64).unwrap();
        assert!(g.x > 0.0 && g.x < 2.0 && g.y.abs() < 0.05, "{g:?}");
    }

    #[test]
    fn velocity_cancels_goal() {
        let mut s = session("open_space");
        let (u, v) = target_pixel(&s);
        s.apply(&ClientCommand::Goto { u, v }).unwrap();
        s.tick();
        s.apply(&ClientCommand::Velocity { v: 0.0, w: 0.5 }).unwrap();
        let out = s.tick();
        assert_eq!(out.state.nav_status, NavStatus::Idle);
        assert!(out.state.goal.is_none());
        assert!(s.simulation().robot.w > 0.0);
    }

    #[test]
    fn stop_zeroes_commands() {
        let mut s = session("open_space");
        s.apply(&ClientCommand::Velocity { v: 0.3, w: 0.0 }).unwrap();
        for _ in 0..10 {
            s.tick();
        }
        s.apply(&ClientCommand::Stop).unwrap();
        for _ in 0..10 {
            s.tick();
        }
        assert_eq!(s.simulation().robot.v, 0.0);
        assert_eq!(s.nav_status(), NavStatus::Idle);
    }

    #[test]
    fn clicks_use_the_frame_geometry() {
        let mut s = session("open_space");
        let (u, v) = (319.5, 400.0);
        let before = s.click_to_goal(u, v).unwrap();
        s.apply(&ClientCommand::SetCamera { tilt: -0.8, pan: 0.0 }).unwrap();
        // Still the old frame until the next render.
        assert_eq!(s.click_to_goal(u, v).unwrap(), before);
        let frame = (0..RENDER_EVERY).filter_map(|_| s.tick().frame).last().unwrap();
        assert_eq!(frame.frame.tilt, -0.8);
        let after = s.click_to_goal(u, v).unwrap();
        let rig = CameraRig::with_pan_tilt(s.cfg.camera, &s.cfg.chain, 0.0, -0.8).unwrap();
        let px = rig.project_base(&Vector3::new(after.x, after.y, 0.0)).unwrap();
        assert!((px.u - u).abs() < 1e-6 && (px.v - v).abs() < 1e-6);
        assert!(after.x < before.x);
    }

    #[test]
    fn frames_every_fourth_tick_with_increasing_seq() {
        let mut s = session("doorway");
        let seqs: Vec<u64> = (0..12).filter_map(|_| s.tick().frame.map(|f| f.frame.seq)).collect();
        assert_eq!(seqs, vec![1, 2, 3]);
    }

    #[test]
    fn load_scenario_resets() {
        let mut s = session("open_space");
        s.apply(&ClientCommand::Velocity { v: 0.4, w: 0.0 }).unwrap();
        for _ in 0..20 {
            s.tick();
        }
        s.apply(&ClientCommand::LoadScenario { name: "block".into() }).unwrap();
        assert_eq!(s.scenario().name, "block");
        assert_eq!(s.simulation().robot.pose, OdomPose::default());
        let err = s.apply(&ClientCommand::LoadScenario { name: "maze".into() }).unwrap_err();
        assert_eq!(err.code, ErrorCode::UnknownScenario);
        assert_eq!(s.tick().state.tick, 21);
    }
}
