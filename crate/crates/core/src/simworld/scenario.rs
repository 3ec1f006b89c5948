use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Bounds, Segment, World};
use crate::odom::OdomPose;

pub const SCENARIO_NAMES: [&str; 3] = ["open_space", "doorway", "block"];

/// Opening left in the doorway wall.
pub const DOOR_WIDTH: f64 = 0.9;
/// Nominal travel from the start pose to the target center.
pub const TRAVEL: f64 = 2.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario '{0}' (expected one of open_space, doorway, block)")]
    UnknownScenario(String),
    #[error("invalid scenario: {0}")]
    Invalid(&'static str),
    #[error("malformed scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Marked stopping area, axis-aligned with the start frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetZone {
    pub center: [f64; 2],
    /// Extent along x and y (m).
    pub size: [f64; 2],
}

impl TargetZone {
    pub fn corners(&self) -> [[f64; 2]; 4] {
        let [cx, cy] = self.center;
        let (hx, hy) = (0.5 * self.size[0], 0.5 * self.size[1]);
        [[cx - hx, cy - hy], [cx + hx, cy - hy], [cx + hx, cy + hy], [cx - hx, cy + hy]]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (x - self.center[0]).abs() <= 0.5 * self.size[0] && (y - self.center[1]).abs() <= 0.5 * self.size[1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub world: World,
    pub start_pose: OdomPose,
    pub target: TargetZone,
}

/// JSON form used for custom worlds. Segments are `[x1, y1, x2, y2]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub bounds: Bounds,
    pub segments: Vec<[f64; 4]>,
    pub start: OdomPose,
    pub target: TargetZone,
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        let spec = ScenarioSpec {
            name: cfg.name,
            world: World {
                obstacles: cfg.segments.iter().map(|s| Segment::new(s[0], s[1], s[2], s[3])).collect(),
                bounds: cfg.bounds,
            },
            start_pose: OdomPose::new(cfg.start.x, cfg.start.y, cfg.start.theta),
            target: cfg.target,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_config(&self) -> ScenarioConfig {
        ScenarioConfig {
            name: self.name.clone(),
            bounds: self.world.bounds,
            segments: self.world.obstacles.iter().map(|s| [s.a.x, s.a.y, s.b.x, s.b.y]).collect(),
            start: self.start_pose,
            target: self.target,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !self.world.bounds.is_valid() {
            return Err(ScenarioError::Invalid("bounds are degenerate"));
        }
        let finite = self.world.obstacles.iter().all(|s| s.a.iter().chain(s.b.iter()).all(|c| c.is_finite()));
        if !finite {
            return Err(ScenarioError::Invalid("segment coordinates must be finite"));
        }
        if !self.target.corners().iter().all(|c| self.world.bounds.contains(c[0], c[1])) {
            return Err(ScenarioError::Invalid("target zone must lie inside the bounds"));
        }
        Ok(())
    }
}

fn room() -> (Bounds, Vec<Segment>) {
    let b = Bounds { min_x: -1.5, min_y: -3.0, max_x: 4.5, max_y: 3.0 };
    let walls = vec![
        Segment::new(b.min_x, b.min_y, b.max_x, b.min_y),
        Segment::new(b.max_x, b.min_y, b.max_x, b.max_y),
        Segment::new(b.max_x, b.max_y, b.min_x, b.max_y),
        Segment::new(b.min_x, b.max_y, b.min_x, b.min_y),
    ];
    (b, walls)
}

/// The three built-in trial worlds. All start at the origin facing +X with
/// the 1.0 x 0.6 m target zone centered 2 m ahead, inside a 6 x 6 m room.
pub fn scenario(name: &str) -> Result<ScenarioSpec, ScenarioError> {
    let (bounds, mut obstacles) = room();
    match name {
        "open_space" => {}
        "doorway" => {
            let x = 0.5 * TRAVEL;
            let half = 0.5 * DOOR_WIDTH;
            obstacles.push(Segment::new(x, bounds.min_y, x, -half));
            obstacles.push(Segment::new(x, half, x, bounds.max_y));
        }
        "block" => {
            let (x0, x1, y0, y1) = (0.5, 1.5, -0.5, 0.5);
            obstacles.push(Segment::new(x0, y0, x1, y0));
            obstacles.push(Segment::new(x1, y0, x1, y1));
            obstacles.push(Segment::new(x1, y1, x0, y1));
            obstacles.push(Segment::new(x0, y1, x0, y0));
        }
        other => return Err(ScenarioError::UnknownScenario(other.to_owned())),
    }
    Ok(ScenarioSpec {
        name: name.to_owned(),
        world: World { obstacles, bounds },
        start_pose: OdomPose::default(),
        target: TargetZone { center: [TRAVEL, 0.0], size: [1.0, 0.6] },
    })
}
