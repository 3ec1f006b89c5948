//! JSON messages exchanged over the command channel. Every message is an
//! object with a `"type"` discriminator.

use serde::{Deserialize, Serialize};

use crate::camgeom::CameraError;
use crate::kinchain::KinematicsError;
use crate::odom::OdomPose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientCommand {
    /// Drive to the floor point under pixel `(u, v)` of the last frame.
    Goto { u: f64, v: f64 },
    Velocity { v: f64, w: f64 },
    Stop,
    SetCamera { tilt: f64, pan: f64 },
    LoadScenario { name: String },
}

impl ClientCommand {
    /// Numeric fields must be finite.
    pub fn validate(&self) -> Result<(), CommandError> {
        let finite = match self {
            ClientCommand::Goto { u, v } => u.is_finite() && v.is_finite(),
            ClientCommand::Velocity { v, w } => v.is_finite() && w.is_finite(),
            ClientCommand::SetCamera { tilt, pan } => tilt.is_finite() && pan.is_finite(),
            ClientCommand::Stop | ClientCommand::LoadScenario { .. } => true,
        };
        if finite {
            Ok(())
        } else {
            Err(CommandError::new(ErrorCode::InvalidCommand, "numeric fields must be finite"))
        }
    }

    /// Parses one text message.
    pub fn parse(text: &str) -> Result<Self, CommandError> {
        let cmd: ClientCommand = serde_json::from_str(text)
            .map_err(|e| CommandError::new(ErrorCode::InvalidCommand, e.to_string()))?;
        cmd.validate()?;
        Ok(cmd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NavStatus {
    Idle,
    Navigating,
    Arrived,
    Blocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalPoint {
    pub x: f64,
    pub y: f64,
}

/// Telemetry for one tick. `pose` and `goal` are in the odometry frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEvent {
    pub tick: u64,
    pub pose: OdomPose,
    pub goal: Option<GoalPoint>,
    pub nav_status: NavStatus,
    pub collision: bool,
    /// Simulator ground truth, for diagnostics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_pose: Option<OdomPose>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    AboveHorizon,
    OutOfRange,
    OutOfFrame,
    BehindCamera,
    NoConvergence,
    UnknownScenario,
    InvalidCommand,
    /// The client fell too far behind the event stream and was dropped.
    Lagged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{code:?}: {message}")]
pub struct CommandError {
    pub code: ErrorCode,
    pub message: String,
}

impl CommandError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<KinematicsError> for CommandError {
    fn from(e: KinematicsError) -> Self {
        let code = match e {
            KinematicsError::AboveHorizon => ErrorCode::AboveHorizon,
            KinematicsError::OutOfRange { .. } => ErrorCode::OutOfRange,
            KinematicsError::BehindCamera => ErrorCode::BehindCamera,
            KinematicsError::Camera(CameraError::OutOfFrame { .. }) => ErrorCode::OutOfFrame,
            KinematicsError::Camera(CameraError::NoConvergence { .. }) => ErrorCode::NoConvergence,
            // A click deep in the corner of a strongly distorted lens.
            KinematicsError::Camera(CameraError::RayTooOblique) => ErrorCode::OutOfFrame,
            _ => ErrorCode::InvalidCommand,
        };
        Self::new(code, e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerEvent {
    State(StateEvent),
    FrameReady { seq: u64 },
    Error { code: ErrorCode, message: String },
}

impl From<CommandError> for ServerEvent {
    fn from(e: CommandError) -> Self {
        ServerEvent::Error { code: e.code, message: e.message }
    }
}

impl ServerEvent {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server events always serialize")
    }
}
