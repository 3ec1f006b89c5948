//! Click-to-go control for telepresence robots.
//!
//! An operator clicks a pixel in the robot's camera frame. The pixel is
//! unprojected through the calibrated lens model ([`camgeom`]) and the camera
//! mount's kinematic chain ([`kinchain`]) onto the floor, giving a destination
//! in the robot-base frame. A map-free reactive navigator ([`reactnav`])
//! then drives there using lidar and dead reckoning ([`odom`]).
//!
//! [`simworld`] provides a deterministic simulator for closed-loop runs,
//! [`teleop`] the network control service and [`experiment`] the headless
//! trial harness.

pub mod camgeom;
pub mod config;
pub mod kinchain;
pub mod odom;
pub mod reactnav;
pub mod experiment;
pub mod simworld;
pub mod teleop;
