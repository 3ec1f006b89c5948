//! Network control surface: a single authoritative control loop owning the
//! simulation, fed by WebSocket clients and read through HTTP snapshots.
//!
//! Routes: `GET /ws` (JSON command/event channel), `GET /state` (latest
//! telemetry), `GET /frame/{seq}` (PNG of a recent frame).

pub mod protocol;
mod server;
mod session;

pub use protocol::{ClientCommand, CommandError, ErrorCode, GoalPoint, NavStatus, ServerEvent, StateEvent};
pub use server::{serve, start, RunningServer, ServeError, ServeOptions, FRAME_HISTORY};
pub use session::{FrameSnapshot, SessionConfig, TeleopSession, TickOutput};
