//! Synthetic camera view of the simulated world.
//!
//! Geometry is projected with the same camera/mount pipeline used to turn
//! clicks into ground points, so a feature rendered at pixel `p` unprojects
//! back onto itself. Polygons are clipped to the view frustum in the optical
//! frame, projected vertex by vertex and scan-filled at pixel centers; walls
//! are painted far to near.

use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;

use super::{SimRobot, World};
use crate::camgeom::{self, CameraModel, NormalizedImagePoint, PixelPoint};
use crate::kinchain::{CameraRig, ChainConfig, JointState, KinematicsError};
use crate::odom::OdomPose;
use crate::simworld::TargetZone;

pub const WALL_HEIGHT: f64 = 0.4;

const NEAR: f64 = 0.01;
const PANEL_WIDTH: f64 = 0.5;
const OUTLINE_WIDTH: f64 = 0.03;
const EDGE_SUBDIVISIONS: usize = 8;

const SKY: [u8; 3] = [170, 200, 235];
const FAR_GROUND: [u8; 3] = [110, 110, 100];
const CHECKER_LIGHT: [u8; 3] = [205, 205, 200];
const CHECKER_DARK: [u8; 3] = [60, 60, 65];
const WALL: [f64; 3] = [190.0, 125.0, 80.0];
const TARGET: [u8; 3] = [220, 30, 30];

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    pub checker_size: f64,
    pub target: Option<TargetZone>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { checker_size: 0.5, target: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderFrame {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB8.
    pub pixels: Vec<u8>,
    pub seq: u64,
    pub joints: JointState,
    pub pan: f64,
    pub tilt: f64,
    /// Ground-truth pose the frame was rendered from.
    pub pose: OdomPose,
}

impl RenderFrame {
    pub fn pixel(&self, u: u32, v: u32) -> [u8; 3] {
        let i = 3 * (v as usize * self.width as usize + u as usize);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn is_sky(&self, u: u32, v: u32) -> bool {
        self.pixel(u, v) == SKY
    }

    pub fn write_png_to<W: Write>(&self, out: W) -> Result<(), png::EncodingError> {
        let mut enc = png::Encoder::new(out, self.width, self.height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header()?;
        writer.write_image_data(&self.pixels)?;
        writer.finish()
    }

    pub fn to_png(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_png_to(&mut buf).expect("in-memory PNG encoding");
        buf
    }

    pub fn save_png(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_png())
    }
}

struct Polygon {
    /// World-frame vertices.
    points: Vec<Vector3<f64>>,
    color: [u8; 3],
}

/// Half-space `n . p <= 0` in the optical frame, with `n` given as `(a, b, c, d)`
/// for `a x + b y + c z + d`.
type Plane = [f64; 4];

struct View<'a> {
    rig: &'a CameraRig,
    pose: OdomPose,
    planes: Vec<Plane>,
    subdivide: bool,
}

impl View<'_> {
    fn to_optical(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let (x, y) = self.pose.to_local(p.x, p.y);
        self.rig.base_to_optical(&Vector3::new(x, y, p.z))
    }

    fn project_polygon(&self, poly: &[Vector3<f64>]) -> Vec<(f64, f64)> {
        let mut pts: Vec<Vector3<f64>> = poly.iter().map(|p| self.to_optical(p)).collect();
        for plane in &self.planes {
            pts = clip(&pts, plane);
            if pts.len() < 3 {
                return Vec::new();
            }
        }
        if self.subdivide {
            pts = subdivide(&pts, EDGE_SUBDIVISIONS);
        }
        pts.iter()
            .filter_map(|p| camgeom::project(&self.rig.model, p).ok())
            .map(|px| (px.u, px.v))
            .collect()
    }
}

fn plane_eval(plane: &Plane, p: &Vector3<f64>) -> f64 {
    plane[0] * p.x + plane[1] * p.y + plane[2] * p.z + plane[3]
}

fn clip(poly: &[Vector3<f64>], plane: &Plane) -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for (i, cur) in poly.iter().enumerate() {
        let next = &poly[(i + 1) % poly.len()];
        let (fc, fn_) = (plane_eval(plane, cur), plane_eval(plane, next));
        if fc <= 0.0 {
            out.push(*cur);
        }
        if (fc <= 0.0) != (fn_ <= 0.0) {
            let t = fc / (fc - fn_);
            out.push(cur + (next - cur) * t);
        }
    }
    out
}

fn subdivide(poly: &[Vector3<f64>], n: usize) -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(poly.len() * n);
    for (i, a) in poly.iter().enumerate() {
        let b = &poly[(i + 1) % poly.len()];
        for k in 0..n {
            out.push(a + (b - a) * (k as f64 / n as f64));
        }
    }
    out
}

/// Normalized-coordinate extent of the image, widened a little so clipped
/// edges land outside the frame.
fn frustum_planes(model: &CameraModel) -> Vec<Plane> {
    let (w, h) = (model.width as f64, model.height as f64);
    let mut border = Vec::new();
    let steps = 16;
    for k in 0..=steps {
        let f = k as f64 / steps as f64;
        border.extend([
            (f * (w - 1.0), 0.0),
            (f * (w - 1.0), h - 1.0),
            (0.0, f * (h - 1.0)),
            (w - 1.0, f * (h - 1.0)),
        ]);
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (u, v) in border {
        let d = NormalizedImagePoint::new((u - model.cx) / model.fx, (v - model.cy) / model.fy);
        let p = camgeom::undistort(&model.distortion, d).unwrap_or(d);
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let mx = 0.05 * (x1 - x0) + 2.0 / model.fx;
    let my = 0.05 * (y1 - y0) + 2.0 / model.fy;
    let (x0, x1, y0, y1) = (x0 - mx, x1 + mx, y0 - my, y1 + my);
    vec![
        [0.0, 0.0, -1.0, NEAR],
        [1.0, 0.0, -x1, 0.0],
        [-1.0, 0.0, x0, 0.0],
        [0.0, 1.0, -y1, 0.0],
        [0.0, -1.0, y0, 0.0],
    ]
}

struct Canvas {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Canvas {
    fn set(&mut self, u: usize, v: usize, c: [u8; 3]) {
        let i = 3 * (v * self.width + u);
        self.pixels[i..i + 3].copy_from_slice(&c);
    }

    /// Even-odd scanline fill sampling pixel centers; edges are half-open so
    /// polygons sharing an edge neither overlap nor leave gaps.
    fn fill(&mut self, pts: &[(f64, f64)], color: [u8; 3]) {
        if pts.len() < 3 {
            return;
        }
        let vmin = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let vmax = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        if !(vmin.is_finite() && vmax.is_finite()) {
            return;
        }
        let j0 = vmin.ceil().max(0.0) as usize;
        let j1 = vmax.ceil().min(self.height as f64);
        if j1 <= 0.0 {
            return;
        }
        let mut xs = Vec::with_capacity(8);
        for j in j0..j1 as usize {
            let y = j as f64;
            xs.clear();
            for (k, p) in pts.iter().enumerate() {
                let q = pts[(k + 1) % pts.len()];
                if (p.1 <= y && y < q.1) || (q.1 <= y && y < p.1) {
                    xs.push(p.0 + (y - p.1) * (q.0 - p.0) / (q.1 - p.1));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                let i0 = pair[0].ceil().max(0.0);
                let i1 = pair[1].ceil().min(self.width as f64);
                if i1 <= i0 {
                    continue;
                }
                for i in i0 as usize..i1 as usize {
                    self.set(i, j, color);
                }
            }
        }
    }
}

fn ground_quad(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Vector3<f64>> {
    vec![
        Vector3::new(x0, y0, 0.0),
        Vector3::new(x1, y0, 0.0),
        Vector3::new(x1, y1, 0.0),
        Vector3::new(x0, y1, 0.0),
    ]
}

fn checkerboard(world: &World, size: f64) -> Vec<Polygon> {
    let b = world.bounds;
    let (i0, i1) = ((b.min_x / size).floor() as i64, (b.max_x / size).ceil() as i64);
    let (j0, j1) = ((b.min_y / size).floor() as i64, (b.max_y / size).ceil() as i64);
    let mut polys = Vec::new();
    for i in i0..i1 {
        for j in j0..j1 {
            let x0 = (i as f64 * size).max(b.min_x);
            let x1 = ((i + 1) as f64 * size).min(b.max_x);
            let y0 = (j as f64 * size).max(b.min_y);
            let y1 = ((j + 1) as f64 * size).min(b.max_y);
            if x1 <= x0 || y1 <= y0 {
                continue;
            }
            let color = if (i + j).rem_euclid(2) == 0 { CHECKER_LIGHT } else { CHECKER_DARK };
            polys.push(Polygon { points: ground_quad(x0, y0, x1, y1), color });
        }
    }
    polys
}

fn target_outline(zone: &TargetZone) -> Vec<Polygon> {
    let c = zone.corners();
    let h = 0.5 * OUTLINE_WIDTH;
    let (xa, ya, xb, yb) = (c[0][0], c[0][1], c[2][0], c[2][1]);
    [
        (xa - h, ya - h, xb + h, ya + h),
        (xa - h, yb - h, xb + h, yb + h),
        (xa - h, ya + h, xa + h, yb - h),
        (xb - h, ya + h, xb + h, yb - h),
    ]
    .into_iter()
    .map(|(x0, y0, x1, y1)| Polygon { points: ground_quad(x0, y0, x1, y1), color: TARGET })
    .collect()
}

fn wall_panels(world: &World) -> Vec<Polygon> {
    let light = nalgebra::Vector2::new(0.6, 0.8);
    let mut polys = Vec::new();
    for seg in &world.obstacles {
        let len = seg.length();
        if len <= 0.0 {
            continue;
        }
        let d = (seg.b - seg.a) / len;
        let normal = nalgebra::Vector2::new(-d.y, d.x);
        let shade = 0.55 + 0.45 * normal.dot(&light).abs();
        let color = WALL.map(|c| (c * shade).round().clamp(0.0, 255.0) as u8);
        let n = (len / PANEL_WIDTH).ceil().max(1.0) as usize;
        for k in 0..n {
            let p = seg.a + (seg.b - seg.a) * (k as f64 / n as f64);
            let q = seg.a + (seg.b - seg.a) * ((k + 1) as f64 / n as f64);
            polys.push(Polygon {
                points: vec![
                    Vector3::new(p.x, p.y, 0.0),
                    Vector3::new(q.x, q.y, 0.0),
                    Vector3::new(q.x, q.y, WALL_HEIGHT),
                    Vector3::new(p.x, p.y, WALL_HEIGHT),
                ],
                color,
            });
        }
    }
    polys
}

/// Renders the robot's camera view.
pub fn render_camera(
    world: &World,
    robot: &SimRobot,
    model: &CameraModel,
    chain: &ChainConfig,
    opts: &RenderOptions,
    seq: u64,
) -> Result<RenderFrame, KinematicsError> {
    let rig = CameraRig::with_pan_tilt(*model, chain, robot.pan, robot.tilt)?;
    let (w, h) = (model.width as usize, model.height as usize);
    let mut canvas = Canvas { width: w, height: h, pixels: vec![0; w * h * 3] };

    for v in 0..h {
        for u in 0..w {
            let below = rig
                .pixel_direction(PixelPoint::new(u as f64, v as f64))
                .map(|d| d.z < 0.0)
                .unwrap_or(false);
            canvas.set(u, v, if below { FAR_GROUND } else { SKY });
        }
    }

    let view = View {
        rig: &rig,
        pose: robot.pose,
        planes: frustum_planes(model),
        subdivide: !model.distortion.is_zero(),
    };

    // The floor never occludes anything above it, so it goes first.
    let mut floor = checkerboard(world, opts.checker_size);
    if let Some(zone) = &opts.target {
        floor.extend(target_outline(zone));
    }
    for poly in &floor {
        canvas.fill(&view.project_polygon(&poly.points), poly.color);
    }

    let cam = rig.camera_position();
    let cam_world = {
        let (x, y) = robot.pose.to_world(cam.x, cam.y);
        Vector3::new(x, y, cam.z)
    };
    let mut walls: Vec<(f64, Polygon)> = wall_panels(world)
        .into_iter()
        .map(|p| {
            let centroid = p.points.iter().sum::<Vector3<f64>>() / p.points.len() as f64;
            ((centroid - cam_world).norm(), p)
        })
        .collect();
    walls.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (_, poly) in &walls {
        canvas.fill(&view.project_polygon(&poly.points), poly.color);
    }

    Ok(RenderFrame {
        width: model.width,
        height: model.height,
        pixels: canvas.pixels,
        seq,
        joints: rig.joints.clone(),
        pan: robot.pan,
        tilt: robot.tilt,
        pose: robot.pose,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reactnav::RobotShape;
    use crate::simworld::scenario;

    fn default_frame(tilt: f64, target: bool) -> RenderFrame {
        let s = scenario("doorway").unwrap();
        let mut robot = SimRobot::new(s.start_pose, RobotShape::default());
        robot.tilt = tilt;
        let opts = RenderOptions { target: target.then_some(s.target), ..Default::default() };
        render_camera(&s.world, &robot, &CameraModel::default(), &ChainConfig::default(), &opts, 0).unwrap()
    }

    #[test]
    fn level_camera_puts_horizon_at_principal_row() {
        let f = default_frame(0.0, false);
        // cy = 239.5: row 239 looks slightly up, row 240 slightly down.
        for u in [0, 100, 320, 639] {
            assert!(f.is_sky(u, 239), "column {u}");
            assert!(!f.is_sky(u, 240), "column {u}");
            assert!(f.is_sky(u, 0));
            assert!(!f.is_sky(u, 479));
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let a = default_frame(-0.5, true);
        let b = default_frame(-0.5, true);
        assert_eq!(a.pixels, b.pixels);
        assert_eq!(a.to_png(), b.to_png());
    }

    #[test]
    fn target_and_walls_are_visible() {
        let f = default_frame(-0.5, true);
        let count = |c: [u8; 3]| (0..f.height).flat_map(|v| (0..f.width).map(move |u| (u, v))).filter(|&(u, v)| f.pixel(u, v) == c).count();
        assert!(count(TARGET) > 100);
        let wallish = (0..f.height)
            .flat_map(|v| (0..f.width).map(move |u| (u, v)))
            .filter(|&(u, v)| {
                let p = f.pixel(u, v);
                p[0] > p[2] + 40 && p != TARGET
            })
            .count();
        assert!(wallish > 1000);
    }

    #[test]
    fn png_header() {
        let png = default_frame(-0.5, false).to_png();
        assert_eq!(&png[..8], b"\x89PNG\r\n\x1a\n");
    }

    #[test]
    fn clipping_keeps_inside_part() {
        let quad = vec![
            Vector3::new(-1.0, 0.0, 1.0),
            Vector3::new(1.0, 0.0, 1.0),
            Vector3::new(1.0, 0.0, -1.0),
            Vector3::new(-1.0, 0.0, -1.0),
        ];
        let out = clip(&quad, &[0.0, 0.0, -1.0, NEAR]);
        assert_eq!(out.len(), 4);
        assert!(out.iter().all(|p| p.z >= NEAR - 1e-15));
    }

    #[test]
    fn shared_edges_leave_no_gaps() {
        let mut c = Canvas { width: 20, height: 20, pixels: vec![0; 20 * 20 * 3] };
        c.fill(&[(2.3, 1.7), (10.6, 3.2), (4.1, 15.8)], [1, 1, 1]);
        c.fill(&[(10.6, 3.2), (17.2, 14.1), (4.1, 15.8)], [2, 2, 2]);
        // Pixel centers strictly inside the union are all painted exactly once.
        for (u, v) in [(7, 9), (8, 9), (9, 9), (10, 9), (6, 12), (7, 12)] {
            assert_ne!(c.pixels[3 * (v * 20 + u)], 0, "gap at ({u}, {v})");
        }
    }
}
