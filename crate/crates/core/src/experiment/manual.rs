//! Scripted stand-in for a human driving with arrow keys.
//!
//! The operator looks at the true pose (what the video shows), decides twice a
//! second and reacts a quarter second late. Commands are keyboard-quantized
//! and follow a turn-then-drive pattern through hand-picked waypoints.

use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::odom::{wrap_angle, OdomPose};
use crate::reactnav::VelocityCmd;

pub const DRIVE_SPEED: f64 = 0.4;
pub const TURN_SPEED: f64 = 0.8;
/// Ticks between decisions (2 Hz at 20 Hz).
pub const DECISION_TICKS: u64 = 10;
/// Ticks between a decision and its effect (0.25 s).
pub const REACTION_TICKS: u64 = 5;

const HEADING_BAND: f64 = 0.2;
const WAYPOINT_RADIUS: f64 = 0.15;
const STOP_RADIUS: f64 = 0.12;
/// How far ahead the operator anticipates stopping (s).
const ANTICIPATION: f64 = 0.35;

/// Waypoints a person would pick for each built-in world.
pub fn route_for(scenario: &str, target: [f64; 2]) -> Vec<[f64; 2]> {
    match scenario {
        "doorway" => vec![[0.55, 0.0], [1.45, 0.0], target],
        "block" => vec![[0.1, 1.0], [1.9, 1.0], target],
        _ => vec![target],
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedOperator {
    route: VecDeque<[f64; 2]>,
    pending: VecDeque<(u64, VelocityCmd)>,
    current: VelocityCmd,
    done: bool,
}

impl ScriptedOperator {
    pub fn new(route: Vec<[f64; 2]>) -> Self {
        Self { route: route.into(), pending: VecDeque::new(), current: VelocityCmd::ZERO, done: false }
    }

    /// True once the operator has released all keys at the destination.
    pub fn finished(&self) -> bool {
        self.done && self.pending.is_empty() && self.current == VelocityCmd::ZERO
    }

    fn decide(&mut self, pose: &OdomPose, speed: f64) -> VelocityCmd {
        loop {
            let Some(&[wx, wy]) = self.route.front() else {
                self.done = true;
                return VelocityCmd::ZERO;
            };
            let dist = pose.distance_to(wx, wy);
            let last = self.route.len() == 1;
            if last && dist - speed * ANTICIPATION <= STOP_RADIUS {
                self.route.pop_front();
                continue;
            }
            if !last && dist <= WAYPOINT_RADIUS {
                self.route.pop_front();
                continue;
            }
            let err = wrap_angle((wy - pose.y).atan2(wx - pose.x) - pose.theta);
            return if err.abs() > HEADING_BAND {
                // Far off to the side or behind: turn first.
                let w = if err > 0.0 || err.abs() >= PI { TURN_SPEED } else { -TURN_SPEED };
                VelocityCmd::new(0.0, w)
            } else {
                VelocityCmd::new(DRIVE_SPEED, 0.0)
            };
        }
    }

    /// Key state at `tick`, given the pose visible on screen and the current speed.
    pub fn command(&mut self, tick: u64, pose: &OdomPose, speed: f64) -> VelocityCmd {
        if tick.is_multiple_of(DECISION_TICKS) && !self.done {
            let cmd = self.decide(pose, speed);
            self.pending.push_back((tick + REACTION_TICKS, cmd));
        }
        while let Some(&(at, cmd)) = self.pending.front() {
            if at > tick {
                break;
            }
            self.current = cmd;
            self.pending.pop_front();
        }
        self.current
    }
}
