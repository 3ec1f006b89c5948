//! Pinhole camera with radial/tangential lens distortion.
//!
//! Frame convention inside this module: optical axis is +Z, image `u` grows to
//! the right along +X and `v` grows downward along +Y. Pixel centers sit on
//! integer coordinates with the origin at the top-left pixel.

// `!(a > b)` is deliberate throughout: NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum depth for a point to count as in front of the camera.
pub const MIN_DEPTH: f64 = 1e-9;

/// Normalized coordinates beyond this magnitude are rejected (~84 deg off-axis).
pub const MAX_NORMALIZED: f64 = 10.0;

const UNDISTORT_TOL: f64 = 1e-10;
const UNDISTORT_MAX_ITERS: usize = 50;
const NEWTON_MAX_ITERS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum CameraError {
    #[error("point is behind the camera (z = {0})")]
    PointBehindCamera(f64),
    #[error("pixel ({u}, {v}) is outside the {width}x{height} frame")]
    OutOfFrame { u: f64, v: f64, width: u32, height: u32 },
    #[error("distortion inversion did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("pixel maps to a ray too far off the optical axis")]
    RayTooOblique,
    #[error("invalid camera parameters: {0}")]
    InvalidParameters(&'static str),
}

/// Radial (`k1`, `k2`, `k3`) and tangential (`p1`, `p2`) lens coefficients.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Distortion {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub p1: f64,
    pub p2: f64,
}

impl Distortion {
    pub fn is_zero(&self) -> bool {
        self.k1 == 0.0 && self.k2 == 0.0 && self.k3 == 0.0 && self.p1 == 0.0 && self.p2 == 0.0
    }

    /// Coefficients in the calibration-tool order `[k1, k2, p1, p2, k3]`.
    pub fn to_array(&self) -> [f64; 5] {
        [self.k1, self.k2, self.p1, self.p2, self.k3]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self { k1: a[0], k2: a[1], p1: a[2], p2: a[3], k3: a[4] }
    }

    fn radial_factor(&self, r2: f64) -> f64 {
        1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3))
    }

    /// True where the model stops being locally invertible: the radial
    /// factor or the Jacobian determinant is no longer positive.
    pub fn is_folded(&self, p: NormalizedImagePoint) -> bool {
        if self.is_zero() {
            return false;
        }
        let [[a, b], [c, d]] = self.jacobian(p.x, p.y);
        !(self.radial_factor(p.x * p.x + p.y * p.y) > 0.0 && a * d - b * c > 0.0)
    }

    /// Partial derivatives of [`distort`], row-major.
    fn jacobian(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let r2 = x * x + y * y;
        let radial = self.radial_factor(r2);
        let dr = self.k1 + r2 * (2.0 * self.k2 + 3.0 * self.k3 * r2);
        let cross = 2.0 * x * y * dr + 2.0 * self.p1 * x + 2.0 * self.p2 * y;
        [
            [radial + 2.0 * x * x * dr + 2.0 * self.p1 * y + 6.0 * self.p2 * x, cross],
            [cross, radial + 2.0 * y * y * dr + 6.0 * self.p1 * y + 2.0 * self.p2 * x],
        ]
    }

    fn tangential(&self, x: f64, y: f64, r2: f64) -> (f64, f64) {
        (
            2.0 * self.p1 * x * y + self.p2 * (r2 + 2.0 * x * x),
            self.p1 * (r2 + 2.0 * y * y) + 2.0 * self.p2 * x * y,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// A point on the unit-depth plane of the optical frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedImagePoint {
    pub x: f64,
    pub y: f64,
}

impl NormalizedImagePoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Back-projected viewing ray. The origin is always the optical center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraRay {
    pub origin: Vector3<f64>,
    pub direction: Vector3<f64>,
}

impl CameraRay {
    /// Point on the ray at unit optical depth (`z = 1`).
    pub fn unit_depth_point(&self) -> Vector3<f64> {
        self.direction / self.direction.z
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub distortion: Distortion,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraModel {
    /// 640x480 placeholder intrinsics with an ideal lens.
    fn default() -> Self {
        Self {
            fx: 525.0,
            fy: 525.0,
            cx: 319.5,
            cy: 239.5,
            distortion: Distortion::default(),
            width: 640,
            height: 480,
        }
    }
}

/// On-disk camera description. `dist` is `[k1, k2, p1, p2, k3]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraConfig {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(default)]
    pub dist: [f64; 5],
    pub width: u32,
    pub height: u32,
}

impl From<&CameraModel> for CameraConfig {
    fn from(m: &CameraModel) -> Self {
        Self {
            fx: m.fx,
            fy: m.fy,
            cx: m.cx,
            cy: m.cy,
            dist: m.distortion.to_array(),
            width: m.width,
            height: m.height,
        }
    }
}

impl TryFrom<CameraConfig> for CameraModel {
    type Error = CameraError;

    fn try_from(c: CameraConfig) -> Result<Self, Self::Error> {
        CameraModel::new(c.fx, c.fy, c.cx, c.cy, Distortion::from_array(c.dist), c.width, c.height)
    }
}

impl CameraModel {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        distortion: Distortion,
        width: u32,
        height: u32,
    ) -> Result<Self, CameraError> {
        let model = Self { fx, fy, cx, cy, distortion, width, height };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(CameraError::InvalidParameters("focal lengths must be positive"));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(CameraError::InvalidParameters("cx must lie in [0, width)"));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(CameraError::InvalidParameters("cy must lie in [0, height)"));
        }
        let d = self.distortion.to_array();
        if d.iter().any(|c| !c.is_finite()) {
            return Err(CameraError::InvalidParameters("distortion coefficients must be finite"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, crate::config::ConfigError> {
        let cfg: CameraConfig = serde_json::from_str(text)?;
        Ok(CameraModel::try_from(cfg)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CameraConfig::from(self)).expect("camera config serializes")
    }

    pub fn contains(&self, px: PixelPoint) -> bool {
        px.u >= 0.0 && px.v >= 0.0 && px.u < self.width as f64 && px.v < self.height as f64
    }

    pub fn project(&self, point: &Vector3<f64>) -> Result<PixelPoint, CameraError> {
        project(self, point)
    }

    pub fn pixel_to_ray(&self, px: PixelPoint) -> Result<CameraRay, CameraError> {
        pixel_to_ray(self, px)
    }
}

/// Applies the lens model to an ideal normalized point.
pub fn distort(coeffs: &Distortion, p: NormalizedImagePoint) -> NormalizedImagePoint {
    let r2 = p.x * p.x + p.y * p.y;
    let radial = coeffs.radial_factor(r2);
    let (tx, ty) = coeffs.tangential(p.x, p.y, r2);
    NormalizedImagePoint { x: p.x * radial + tx, y: p.y * radial + ty }
}

/// Inverts [`distort`] by fixed-point iteration seeded at the distorted point,
/// with a Newton finish when that stalls.
pub fn undistort(
    coeffs: &Distortion,
    distorted: NormalizedImagePoint,
) -> Result<NormalizedImagePoint, CameraError> {
    if coeffs.is_zero() {
        return Ok(distorted);
    }
    let (xd, yd) = (distorted.x, distorted.y);
    let (mut x, mut y) = (xd, yd);
    for _ in 0..UNDISTORT_MAX_ITERS {
        let r2 = x * x + y * y;
        let radial = coeffs.radial_factor(r2);
        let (tx, ty) = coeffs.tangential(x, y, r2);
        let nx = (xd - tx) / radial;
        let ny = (yd - ty) / radial;
        if !(nx.is_finite() && ny.is_finite()) {
            break;
        }
        let step = (nx - x).abs().max((ny - y).abs());
        x = nx;
        y = ny;
        if step <= f64::EPSILON * (1.0 + x.abs().max(y.abs())) {
            break;
        }
    }
    // Near the edge of the invertible region the fixed point contracts too
    // slowly; finish with Newton steps from wherever it got to.
    for _ in 0..NEWTON_MAX_ITERS {
        let check = distort(coeffs, NormalizedImagePoint { x, y });
        let (ex, ey) = (check.x - xd, check.y - yd);
        if !(ex.abs().max(ey.abs()) > UNDISTORT_TOL * 1e-3) {
            break;
        }
        let [[a, b], [c, d]] = coeffs.jacobian(x, y);
        let det = a * d - b * c;
        if !(det.abs() > 1e-12) {
            break;
        }
        x -= (d * ex - b * ey) / det;
        y -= (a * ey - c * ex) / det;
    }
    let check = distort(coeffs, NormalizedImagePoint { x, y });
    let residual = (check.x - xd).abs().max((check.y - yd).abs());
    // Roots past the fold are not the ray that produced the pixel.
    let unfolded = !coeffs.is_folded(NormalizedImagePoint { x, y });
    if residual.is_finite() && residual <= UNDISTORT_TOL && unfolded {
        Ok(NormalizedImagePoint { x, y })
    } else {
        Err(CameraError::NoConvergence { residual })
    }
}

/// Projects a camera-frame point (meters) to a pixel. The result may fall
/// outside the frame.
pub fn project(model: &CameraModel, point: &Vector3<f64>) -> Result<PixelPoint, CameraError> {
    if !(point.z > MIN_DEPTH) {
        return Err(CameraError::PointBehindCamera(point.z));
    }
    let ideal = NormalizedImagePoint { x: point.x / point.z, y: point.y / point.z };
    if model.distortion.is_folded(ideal) {
        // Past the fold the polynomial maps rays back toward the center;
        // no real lens images them there.
        return Err(CameraError::RayTooOblique);
    }
    let d = distort(&model.distortion, ideal);
    Ok(PixelPoint { u: model.fx * d.x + model.cx, v: model.fy * d.y + model.cy })
}

/// Back-projects an in-frame pixel to a unit viewing ray in the camera frame.
pub fn pixel_to_ray(model: &CameraModel, px: PixelPoint) -> Result<CameraRay, CameraError> {
    if !model.contains(px) {
        return Err(CameraError::OutOfFrame {
            u: px.u,
            v: px.v,
            width: model.width,
            height: model.height,
        });
    }
    let distorted = NormalizedImagePoint {
        x: (px.u - model.cx) / model.fx,
        y: (px.v - model.cy) / model.fy,
    };
    let ideal = undistort(&model.distortion, distorted)?;
    if ideal.x.abs() >= MAX_NORMALIZED || ideal.y.abs() >= MAX_NORMALIZED {
        return Err(CameraError::RayTooOblique);
    }
    Ok(CameraRay {
        origin: Vector3::zeros(),
        direction: Vector3::new(ideal.x, ideal.y, 1.0).normalize(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn model_500() -> CameraModel {
        CameraModel::new(500.0, 500.0, 320.0, 240.0, Distortion::default(), 1000, 480).unwrap()
    }

    #[test]
    fn principal_axis_hits_principal_point() {
        let m = CameraModel::new(1.0, 1.0, 0.0, 0.0, Distortion::default(), 2, 2).unwrap();
        let px = project(&m, &Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!((px.u, px.v), (0.0, 0.0));
    }

    #[test]
    fn project_ideal_lens() {
        let px = project(&model_500(), &Vector3::new(1.0, 0.0, 2.0)).unwrap();
        assert_eq!((px.u, px.v), (570.0, 240.0));
    }

    #[test]
    fn project_with_barrel_distortion() {
        let mut m = model_500();
        m.distortion.k1 = -0.1;
        let px = project(&m, &Vector3::new(1.0, 0.0, 2.0)).unwrap();
        // x = 0.5, r^2 = 0.25: u = 320 + 500 * 0.5 * (1 - 0.025)
        let oracle = 320.0 + 500.0 * 0.5 * (1.0 + (-0.1) * 0.25);
        assert_relative_eq!(oracle, 563.75, epsilon = 1e-12);
        assert_relative_eq!(px.u, 563.75, epsilon = 1e-12);
        assert_eq!(px.v, 240.0);
    }

    #[test]
    fn project_rejects_points_behind() {
        let err = project(&model_500(), &Vector3::new(0.0, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, CameraError::PointBehindCamera(_)));
        assert!(project(&model_500(), &Vector3::new(1.0, 1.0, -2.0)).is_err());
    }

    #[test]
    fn distort_identity_and_origin() {
        let p = NormalizedImagePoint::new(0.3, -0.2);
        assert_eq!(distort(&Distortion::default(), p), p);
        let any = Distortion { k1: 0.2, k2: -0.03, k3: 0.01, p1: 0.004, p2: -0.007 };
        assert_eq!(distort(&any, NormalizedImagePoint::new(0.0, 0.0)), NormalizedImagePoint::new(0.0, 0.0));
    }

    #[test]
    fn distort_hand_evaluated() {
        let c = Distortion { k1: -0.2, p1: 0.01, ..Default::default() };
        let d = distort(&c, NormalizedImagePoint::new(0.5, 0.5));
        assert_relative_eq!(d.x, 0.455, epsilon = 1e-15);
        assert_relative_eq!(d.y, 0.46, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let c = Distortion { k1: -0.27, k2: 0.04, k3: -0.008, p1: 0.007, p2: -0.009 };
        let (x, y, h) = (0.43, -0.31, 1e-6);
        let j = c.jacobian(x, y);
        let f = |x, y| distort(&c, NormalizedImagePoint::new(x, y));
        let (px, mx, py, my) = (f(x + h, y), f(x - h, y), f(x, y + h), f(x, y - h));
        let fd = [
            [(px.x - mx.x) / (2.0 * h), (py.x - my.x) / (2.0 * h)],
            [(px.y - mx.y) / (2.0 * h), (py.y - my.y) / (2.0 * h)],
        ];
        for (row, fd_row) in j.iter().zip(fd) {
            for (a, b) in row.iter().zip(fd_row) {
                assert_relative_eq!(*a, b, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn inverts_close_to_the_fold() {
        // Pure k1 = -0.3 folds at r = 1.054; the fixed point stalls well
        // before that.
        let c = Distortion { k1: -0.3, p1: 0.002, p2: -0.001, ..Default::default() };
        for r in [0.8, 0.9, 0.95, 1.0] {
            for phi in [0.1f64, 0.9, 2.5, -2.0] {
                let p = NormalizedImagePoint::new(r * phi.cos(), r * phi.sin());
                let u = undistort(&c, distort(&c, p)).unwrap();
                assert!((u.x - p.x).abs().max((u.y - p.y).abs()) < 1e-9, "r={r} phi={phi}");
            }
        }
    }

    #[test]
    fn undistort_examples() {
        let p = NormalizedImagePoint::new(0.3, -0.2);
        assert_eq!(undistort(&Distortion::default(), p).unwrap(), p);

        let c = Distortion { k1: -0.2, p1: 0.01, ..Default::default() };
        let u = undistort(&c, NormalizedImagePoint::new(0.455, 0.46)).unwrap();
        assert_relative_eq!(u.x, 0.5, epsilon = 1e-10);
        assert_relative_eq!(u.y, 0.5, epsilon = 1e-10);
        let back = distort(&c, u);
        assert!((back.x - 0.455).abs() < 1e-10 && (back.y - 0.46).abs() < 1e-10);

        let c = Distortion { k1: -0.1, ..Default::default() };
        assert_eq!(undistort(&c, NormalizedImagePoint::new(0.0, 0.0)).unwrap(), NormalizedImagePoint::new(0.0, 0.0));
    }

    #[test]
    fn project_rejects_points_past_the_fold() {
        let m = CameraModel { distortion: Distortion { k1: -0.3, ..Default::default() }, ..CameraModel::default() };
        // Ideal r = 2 would otherwise land back inside the frame.
        let p = Vector3::new(2.0, 0.0, 1.0);
        let d = distort(&m.distortion, NormalizedImagePoint::new(2.0, 0.0));
        assert!(m.contains(PixelPoint::new(m.fx * d.x + m.cx, m.cy)));
        assert_eq!(project(&m, &p), Err(CameraError::RayTooOblique));
        assert!(project(&m, &Vector3::new(0.9, 0.0, 1.0)).is_ok());
    }

    #[test]
    fn undistort_reports_non_convergence() {
        // Barrel distortion maps no ideal point further out than r = 0.70.
        let c = Distortion { k1: -0.3, ..Default::default() };
        let err = undistort(&c, NormalizedImagePoint::new(1.0, 0.0)).unwrap_err();
        assert!(matches!(err, CameraError::NoConvergence { .. }));
    }

    #[test]
    fn pixel_to_ray_examples() {
        let m = model_500();
        let r = pixel_to_ray(&m, PixelPoint::new(320.0, 240.0)).unwrap();
        assert_eq!(r.origin, Vector3::zeros());
        assert_relative_eq!(r.direction, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-15);

        let r = pixel_to_ray(&m, PixelPoint::new(820.0, 240.0)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(r.direction, Vector3::new(s, 0.0, s), epsilon = 1e-15);
    }

    #[test]
    fn pixel_to_ray_rejects_out_of_frame() {
        let m = model_500();
        for (u, v) in [(-0.5, 10.0), (1000.0, 10.0), (10.0, 480.0), (10.0, -1.0)] {
            assert!(matches!(
                pixel_to_ray(&m, PixelPoint::new(u, v)),
                Err(CameraError::OutOfFrame { .. })
            ));
        }
    }

    #[test]
    fn invalid_models_rejected() {
        let d = Distortion::default();
        assert!(CameraModel::new(0.0, 1.0, 1.0, 1.0, d, 4, 4).is_err());
        assert!(CameraModel::new(1.0, 1.0, 4.0, 1.0, d, 4, 4).is_err());
        assert!(CameraModel::new(1.0, 1.0, 1.0, -1.0, d, 4, 4).is_err());
    }

    #[test]
    fn config_round_trip_keeps_coefficient_order() {
        let text = r#"{"fx":600,"fy":610,"cx":320,"cy":240,"dist":[-0.1,0.02,0.001,-0.002,0.003],"width":640,"height":480}"#;
        let m = CameraModel::from_json(text).unwrap();
        assert_eq!(m.distortion.k1, -0.1);
        assert_eq!(m.distortion.k2, 0.02);
        assert_eq!(m.distortion.p1, 0.001);
        assert_eq!(m.distortion.p2, -0.002);
        assert_eq!(m.distortion.k3, 0.003);
        assert_eq!(CameraModel::from_json(&m.to_json()).unwrap(), m);
    }

    proptest! {
        #[test]
        fn project_is_depth_scale_invariant(
            x in -2.0f64..2.0, y in -2.0f64..2.0, z in 0.2f64..20.0, s in 0.01f64..100.0
        ) {
            let m = CameraModel {
                distortion: Distortion { k1: -0.2, k2: 0.03, k3: -0.005, p1: 0.002, p2: -0.003 },
                ..CameraModel::default()
            };
            let p = Vector3::new(x, y, z);
            let (a, b) = match (project(&m, &p), project(&m, &(p * s))) {
                (Ok(a), Ok(b)) => (a, b),
                // Oblique rays past the fold are rejected at every depth.
                (Err(e), Err(f)) => {
                    prop_assert_eq!(e, f);
                    return Ok(());
                }
                other => return Err(TestCaseError::fail(format!("{other:?}"))),
            };
            prop_assert!((a.u - b.u).abs() <= 1e-9 * (1.0 + a.u.abs()));
            prop_assert!((a.v - b.v).abs() <= 1e-9 * (1.0 + a.v.abs()));
        }

        #[test]
        fn zero_distortion_is_exact_identity(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let p = NormalizedImagePoint::new(x, y);
            prop_assert_eq!(distort(&Distortion::default(), p), p);
        }
    }
}
