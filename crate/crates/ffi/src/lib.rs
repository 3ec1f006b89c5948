//! C ABI over the teledrive geometry and simulator.
//!
//! Conventions: every fallible function returns a [`TdStatus`] and writes
//! results through out-pointers. Handles are opaque and owned by the caller
//! until passed to the matching `*_free`. The message for the most recent
//! failure on the calling thread is available from [`td_last_error_message`].
//! Panics never cross the boundary; they surface as `TD_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use teledrive::camgeom::{CameraError, CameraModel, PixelPoint};
use teledrive::kinchain::{webot_chain, CameraRig, ChainConfig, KinematicsError};
use teledrive::simworld::{scenario, ScenarioError, ScenarioSpec};
use teledrive::teleop::{ClientCommand, CommandError, ErrorCode, NavStatus, SessionConfig, TeleopSession};

use nalgebra::Vector3;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    AboveHorizon = 4,
    OutOfRange = 5,
    OutOfFrame = 6,
    BehindCamera = 7,
    NoConvergence = 8,
    UnknownScenario = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdNavStatus {
    Idle = 0,
    Navigating = 1,
    Arrived = 2,
    Blocked = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TdPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// One tick of telemetry. `pose` is odometry, `true_pose` is ground truth.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdSimState {
    pub tick: u64,
    pub pose: TdPose,
    pub true_pose: TdPose,
    pub nav_status: TdNavStatus,
    pub collision: bool,
    pub has_goal: bool,
    pub goal_x: f64,
    pub goal_y: f64,
    /// Sequence number of the newest rendered frame.
    pub frame_seq: u64,
}

/// Camera model plus mast chain at fixed pan/tilt.
pub struct TdCameraRig {
    model: CameraModel,
    chain: ChainConfig,
    rig: CameraRig,
}

/// A scenario simulation driven by click-to-go or velocity commands.
pub struct TdSimulation {
    session: TeleopSession,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

struct Failure(TdStatus, String);

impl From<KinematicsError> for Failure {
    fn from(e: KinematicsError) -> Self {
        let status = match e {
            KinematicsError::AboveHorizon => TdStatus::AboveHorizon,
            KinematicsError::OutOfRange { .. } => TdStatus::OutOfRange,
            KinematicsError::BehindCamera => TdStatus::BehindCamera,
            KinematicsError::Camera(c) => return c.into(),
            _ => TdStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<CameraError> for Failure {
    fn from(e: CameraError) -> Self {
        let status = match e {
            CameraError::NoConvergence { .. } => TdStatus::NoConvergence,
            CameraError::OutOfFrame { .. } | CameraError::RayTooOblique => TdStatus::OutOfFrame,
            _ => TdStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<CommandError> for Failure {
    fn from(e: CommandError) -> Self {
        let status = match e.code {
            ErrorCode::AboveHorizon => TdStatus::AboveHorizon,
            ErrorCode::OutOfRange => TdStatus::OutOfRange,
            ErrorCode::OutOfFrame => TdStatus::OutOfFrame,
            ErrorCode::BehindCamera => TdStatus::BehindCamera,
            ErrorCode::NoConvergence => TdStatus::NoConvergence,
            ErrorCode::UnknownScenario => TdStatus::UnknownScenario,
            ErrorCode::InvalidCommand | ErrorCode::Lagged => TdStatus::InvalidArgument,
        };
        Failure(status, e.message)
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let status = match e {
            ScenarioError::UnknownScenario(_) => TdStatus::UnknownScenario,
            ScenarioError::Json(_) => TdStatus::ParseError,
            _ => TdStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<teledrive::config::ConfigError> for Failure {
    fn from(e: teledrive::config::ConfigError) -> Self {
        Failure(TdStatus::ParseError, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(TdStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(TdStatus::InvalidArgument, msg.into())
}

/// Runs `f`, recording the error message and converting panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TdStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            TdStatus::Panic
        }
    }
}

/// # Safety
/// `s` is null or a valid NUL-terminated string.
unsafe fn opt_str<'a>(s: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if s.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(s).to_str().map(Some).map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn finite(values: &[f64]) -> Result<(), Failure> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid("arguments must be finite"))
    }
}

/// Static name of a status code, e.g. `"above_horizon"`.
#[no_mangle]
pub extern "C" fn td_status_str(status: TdStatus) -> *const c_char {
    let s: &'static CStr = match status {
        TdStatus::Ok => c"ok",
        TdStatus::NullPointer => c"null_pointer",
        TdStatus::InvalidArgument => c"invalid_argument",
        TdStatus::ParseError => c"parse_error",
        TdStatus::AboveHorizon => c"above_horizon",
        TdStatus::OutOfRange => c"out_of_range",
        TdStatus::OutOfFrame => c"out_of_frame",
        TdStatus::BehindCamera => c"behind_camera",
        TdStatus::NoConvergence => c"no_convergence",
        TdStatus::UnknownScenario => c"unknown_scenario",
        TdStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// always NUL-terminated when `len > 0`). Returns the full message length in
/// bytes, excluding the terminator.
///
/// # Safety
/// `buf` is null or points to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn td_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a rig. Either JSON argument may be null to use the built-in
/// 640x480 camera or pan/tilt mast.
///
/// # Safety
/// String arguments are null or NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn td_rig_new(
    camera_json: *const c_char,
    chain_json: *const c_char,
    pan: f64,
    tilt: f64,
    out: *mut *mut TdCameraRig,
) -> TdStatus {
    guard(|| {
        let out = self::out(out, "out")?;
        finite(&[pan, tilt])?;
        let model = match opt_str(camera_json, "camera_json")? {
            Some(t) => CameraModel::from_json(t)?,
            None => CameraModel::default(),
        };
        let chain = match opt_str(chain_json, "chain_json")? {
            Some(t) => ChainConfig::from_json(t)?,
            None => webot_chain(),
        };
        let rig = CameraRig::with_pan_tilt(model, &chain, pan, tilt)?;
        *out = Box::into_raw(Box::new(TdCameraRig { model, chain, rig }));
        Ok(())
    })
}

/// # Safety
/// `rig` is null or a live handle from [`td_rig_new`]; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn td_rig_free(rig: *mut TdCameraRig) {
    if !rig.is_null() {
        drop(Box::from_raw(rig));
    }
}

/// # Safety
/// `rig` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn td_rig_set_pan_tilt(rig: *mut TdCameraRig, pan: f64, tilt: f64) -> TdStatus {
    guard(|| {
        let r = out(rig, "rig")?;
        finite(&[pan, tilt])?;
        r.rig = CameraRig::with_pan_tilt(r.model, &r.chain, pan, tilt)?;
        Ok(())
    })
}

/// Floor point (robot base frame, meters) under pixel `(u, v)`.
///
/// # Safety
/// `rig` is a live handle; `x` and `y` are writable.
#[no_mangle]
pub unsafe extern "C" fn td_rig_pixel_to_ground(
    rig: *const TdCameraRig,
    u: f64,
    v: f64,
    x: *mut f64,
    y: *mut f64,
) -> TdStatus {
    guard(|| {
        let r = rig.as_ref().ok_or_else(|| null("rig"))?;
        let (x, y) = (out(x, "x")?, out(y, "y")?);
        finite(&[u, v])?;
        let g = r.rig.pixel_to_ground(PixelPoint::new(u, v))?;
        (*x, *y) = (g.x, g.y);
        Ok(())
    })
}

/// Pixel of a base-frame point. The pixel may lie outside the image.
///
/// # Safety
/// `rig` is a live handle; `u` and `v` are writable.
#[no_mangle]
pub unsafe extern "C" fn td_rig_project(
    rig: *const TdCameraRig,
    x: f64,
    y: f64,
    z: f64,
    u: *mut f64,
    v: *mut f64,
) -> TdStatus {
    guard(|| {
        let r = rig.as_ref().ok_or_else(|| null("rig"))?;
        let (u, v) = (out(u, "u")?, out(v, "v")?);
        finite(&[x, y, z])?;
        let px = r.rig.project_base(&Vector3::new(x, y, z))?;
        (*u, *v) = (px.u, px.v);
        Ok(())
    })
}

/// Starts a simulation of a built-in scenario (`open_space`, `doorway`,
/// `block`) or, when `scenario_json` is non-null, a scenario document.
///
/// # Safety
/// String arguments are null or NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn td_sim_new(
    scenario_name: *const c_char,
    scenario_json: *const c_char,
    seed: u64,
    out: *mut *mut TdSimulation,
) -> TdStatus {
    guard(|| {
        let out = self::out(out, "out")?;
        let spec = match (opt_str(scenario_json, "scenario_json")?, opt_str(scenario_name, "scenario_name")?) {
            (Some(json), _) => ScenarioSpec::from_json(json)?,
            (None, Some(name)) => scenario(name)?,
            (None, None) => return Err(null("scenario_name")),
        };
        let cfg = SessionConfig { seed, ..Default::default() };
        *out = Box::into_raw(Box::new(TdSimulation { session: TeleopSession::new(cfg, spec) }));
        Ok(())
    })
}

/// # Safety
/// `sim` is null or a live handle from [`td_sim_new`]; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn td_sim_free(sim: *mut TdSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

unsafe fn apply(sim: *mut TdSimulation, cmd: ClientCommand) -> TdStatus {
    guard(|| {
        let s = out(sim, "sim")?;
        cmd.validate()?;
        s.session.apply(&cmd)?;
        Ok(())
    })
}

/// Sets a goal at the floor point under pixel `(u, v)` of the last frame.
///
/// # Safety
/// `sim` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn td_sim_goto_pixel(sim: *mut TdSimulation, u: f64, v: f64) -> TdStatus {
    apply(sim, ClientCommand::Goto { u, v })
}

/// Manual drive; cancels any goal.
///
/// # Safety
/// `sim` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn td_sim_set_velocity(sim: *mut TdSimulation, v: f64, w: f64) -> TdStatus {
    apply(sim, ClientCommand::Velocity { v, w })
}

/// # Safety
/// `sim` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn td_sim_stop(sim: *mut TdSimulation) -> TdStatus {
    apply(sim, ClientCommand::Stop)
}

/// # Safety
/// `sim` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn td_sim_set_camera(sim: *mut TdSimulation, tilt: f64, pan: f64) -> TdStatus {
    apply(sim, ClientCommand::SetCamera { tilt, pan })
}

fn pose(p: teledrive::odom::OdomPose) -> TdPose {
    TdPose { x: p.x, y: p.y, theta: p.theta }
}

fn snapshot(session: &TeleopSession) -> TdSimState {
    let s = session.state();
    let goal = s.goal;
    TdSimState {
        tick: s.tick,
        pose: pose(s.pose),
        true_pose: pose(session.simulation().robot.pose),
        nav_status: match s.nav_status {
            NavStatus::Idle => TdNavStatus::Idle,
            NavStatus::Navigating => TdNavStatus::Navigating,
            NavStatus::Arrived => TdNavStatus::Arrived,
            NavStatus::Blocked => TdNavStatus::Blocked,
        },
        collision: s.collision,
        has_goal: goal.is_some(),
        goal_x: goal.map_or(0.0, |g| g.x),
        goal_y: goal.map_or(0.0, |g| g.y),
        frame_seq: session.last_frame().frame.seq,
    }
}

/// Advances `ticks` control ticks and reports the final state (`state` may be null).
///
/// # Safety
/// `sim` is a live handle; `state` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn td_sim_step(sim: *mut TdSimulation, ticks: u32, state: *mut TdSimState) -> TdStatus {
    guard(|| {
        let s = out(sim, "sim")?;
        for _ in 0..ticks {
            s.session.tick();
        }
        if let Some(st) = state.as_mut() {
            *st = snapshot(&s.session);
        }
        Ok(())
    })
}

/// Current state without advancing.
///
/// # Safety
/// `sim` is a live handle; `state` is writable.
#[no_mangle]
pub unsafe extern "C" fn td_sim_state(sim: *const TdSimulation, state: *mut TdSimState) -> TdStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        *out(state, "state")? = snapshot(&s.session);
        Ok(())
    })
}

/// Encodes the last rendered frame as PNG. Release with [`td_buffer_free`].
///
/// # Safety
/// `sim` is a live handle; `data` and `len` are writable.
#[no_mangle]
pub unsafe extern "C" fn td_sim_frame_png(
    sim: *const TdSimulation,
    data: *mut *mut u8,
    len: *mut usize,
) -> TdStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        let (data, len) = (out(data, "data")?, out(len, "len")?);
        let bytes = s.session.last_frame().frame.to_png().into_boxed_slice();
        *len = bytes.len();
        *data = Box::into_raw(bytes).cast::<u8>();
        Ok(())
    })
}

/// # Safety
/// `data`/`len` come from [`td_sim_frame_png`] and are freed once.
#[no_mangle]
pub unsafe extern "C" fn td_buffer_free(data: *mut u8, len: usize) {
    if !data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(data, len)));
    }
}
