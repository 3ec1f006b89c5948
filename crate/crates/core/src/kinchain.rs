//! Denavit-Hartenberg camera mount and the pixel-to-ground unprojection.
//!
//! The robot base frame has +X forward, +Y left and +Z up, with the floor at
//! `Z = 0`. The chain's terminal frame is the camera mount; [`AxisRemap`]
//! converts mount coordinates to the optical frame used by [`crate::camgeom`].

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camgeom::{self, CameraError, CameraModel, CameraRay, PixelPoint};

/// Clicks resolving further than this from the base are rejected.
pub const MAX_CLICK_RANGE: f64 = 10.0;

const ORTHONORMAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum KinematicsError {
    #[error("chain has {expected} revolute joints but {got} angles were supplied")]
    JointCountMismatch { expected: usize, got: usize },
    #[error("the ray does not descend toward the ground")]
    AboveHorizon,
    #[error("the ground intersection lies behind the camera")]
    BehindCamera,
    #[error("ground point is {range:.2} m away, beyond the {limit} m click range")]
    OutOfRange { range: f64, limit: f64 },
    #[error("degenerate ray: both points coincide")]
    DegenerateRay,
    #[error("invalid link parameters: {0}")]
    InvalidLink(&'static str),
    #[error(transparent)]
    Camera(#[from] CameraError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Fixed,
    Revolute,
}

/// One link in standard DH form: `Rz(theta) * Tz(d) * Tx(a) * Rx(alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhLink {
    pub a: f64,
    pub d: f64,
    pub alpha: f64,
    #[serde(default)]
    pub theta_offset: f64,
    #[serde(rename = "joint")]
    pub joint_kind: JointKind,
}

impl DhLink {
    pub fn fixed(a: f64, d: f64, alpha: f64, theta_offset: f64) -> Self {
        Self { a, d, alpha, theta_offset, joint_kind: JointKind::Fixed }
    }

    pub fn revolute(a: f64, d: f64, alpha: f64, theta_offset: f64) -> Self {
        Self { a, d, alpha, theta_offset, joint_kind: JointKind::Revolute }
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !(self.a.is_finite() && self.d.is_finite() && self.theta_offset.is_finite()) {
            return Err(KinematicsError::InvalidLink("a, d and theta_offset must be finite"));
        }
        if !(-PI..=PI).contains(&self.alpha) {
            return Err(KinematicsError::InvalidLink("alpha must lie in [-pi, pi]"));
        }
        Ok(())
    }
}

/// Joint angles, one per revolute link, in chain order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct JointState {
    pub q: Vec<f64>,
}

impl JointState {
    pub fn new(q: Vec<f64>) -> Self {
        Self { q }
    }
}

/// Rigid homogeneous transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform(pub Matrix4<f64>);

impl Transform {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    pub fn translation(x: f64, y: f64, z: f64) -> Self {
        Self(Matrix4::new_translation(&Vector3::new(x, y, z)))
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation_part(&self) -> Vector3<f64> {
        self.0.fixed_view::<3, 1>(0, 3).into_owned()
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let h = self.0 * Vector4::new(p.x, p.y, p.z, 1.0);
        Vector3::new(h.x, h.y, h.z)
    }

    /// Rigid inverse `[R^T | -R^T t]`.
    pub fn inverse(&self) -> Self {
        let rt = self.rotation().transpose();
        let t = -(rt * self.translation_part());
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rt);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
        Self(m)
    }

    /// Largest entry of `|R^T R - I|` plus `|det R - 1|`.
    pub fn orthonormality_error(&self) -> f64 {
        let r = self.rotation();
        let gram = (r.transpose() * r - Matrix3::identity()).abs().max();
        gram + (r.determinant() - 1.0).abs()
    }

    pub fn is_rigid(&self) -> bool {
        let bottom = self.0.row(3);
        self.orthonormality_error() < ORTHONORMAL_TOL
            && bottom[0] == 0.0
            && bottom[1] == 0.0
            && bottom[2] == 0.0
            && bottom[3] == 1.0
    }
}

impl std::ops::Mul for Transform {
    type Output = Transform;
    fn mul(self, rhs: Transform) -> Transform {
        Transform(self.0 * rhs.0)
    }
}

/// Fixed rotation between the chain's terminal frame and the optical frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisRemap {
    /// Optical axis along the mount's +Y: optical `(X, Y, Z) = (-Z, -X, Y)`.
    /// Serialized under the name the chain file format uses for it.
    #[default]
    #[serde(rename = "paper_eq10")]
    ForwardY,
    Identity,
}

impl AxisRemap {
    /// Matrix taking mount coordinates to optical coordinates.
    pub fn matrix(&self) -> Matrix3<f64> {
        match self {
            AxisRemap::ForwardY => Matrix3::new(
                0.0, 0.0, -1.0, //
                -1.0, 0.0, 0.0, //
                0.0, 1.0, 0.0,
            ),
            AxisRemap::Identity => Matrix3::identity(),
        }
    }

    pub fn mount_to_optical(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.matrix() * p
    }

    pub fn optical_to_mount(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.matrix().transpose() * p
    }
}

/// Floor point in the robot-base frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundPoint {
    pub x: f64,
    pub y: f64,
}

impl GroundPoint {
    pub fn range(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

pub fn link_transform(link: &DhLink, q: f64) -> Transform {
    let theta = link.theta_offset
        + match link.joint_kind {
            JointKind::Revolute => q,
            JointKind::Fixed => 0.0,
        };
    let (st, ct) = theta.sin_cos();
    let (sa, ca) = link.alpha.sin_cos();
    Transform(Matrix4::new(
        ct, -st * ca, st * sa, link.a * ct, //
        st, ct * ca, -ct * sa, link.a * st, //
        0.0, sa, ca, link.d, //
        0.0, 0.0, 0.0, 1.0,
    ))
}

pub fn revolute_count(chain: &[DhLink]) -> usize {
    chain.iter().filter(|l| l.joint_kind == JointKind::Revolute).count()
}

/// Ordered product of link transforms: base <- camera mount.
pub fn chain_transform(chain: &[DhLink], joints: &JointState) -> Result<Transform, KinematicsError> {
    let expected = revolute_count(chain);
    if joints.q.len() != expected {
        return Err(KinematicsError::JointCountMismatch { expected, got: joints.q.len() });
    }
    let mut q = joints.q.iter();
    let mut t = Transform::identity();
    for link in chain {
        let angle = match link.joint_kind {
            JointKind::Revolute => *q.next().expect("joint count checked"),
            JointKind::Fixed => 0.0,
        };
        t = t * link_transform(link, angle);
    }
    Ok(t)
}

/// Lifts a camera ray into the base frame as two points of the viewing line:
/// the optical center and the point at unit optical depth.
pub fn camera_ray_in_base(
    t: &Transform,
    remap: AxisRemap,
    ray: &CameraRay,
) -> (Vector3<f64>, Vector3<f64>) {
    let p0 = t.translation_part();
    let mount = remap.optical_to_mount(&ray.unit_depth_point());
    (p0, t.apply(&mount))
}

/// Intersects the line through `p0` and `p1` with the floor.
pub fn intersect_ground(p0: &Vector3<f64>, p1: &Vector3<f64>) -> Result<GroundPoint, KinematicsError> {
    intersect_ground_within(p0, p1, MAX_CLICK_RANGE)
}

pub fn intersect_ground_within(
    p0: &Vector3<f64>,
    p1: &Vector3<f64>,
    max_range: f64,
) -> Result<GroundPoint, KinematicsError> {
    if p0 == p1 {
        return Err(KinematicsError::DegenerateRay);
    }
    let dz = p1.z - p0.z;
    if dz >= 0.0 {
        return Err(KinematicsError::AboveHorizon);
    }
    let t = -p0.z / dz;
    if t <= 0.0 {
        return Err(KinematicsError::BehindCamera);
    }
    let hit = p0 + (p1 - p0) * t;
    let gp = GroundPoint { x: hit.x, y: hit.y };
    let range = gp.range();
    if range > max_range {
        return Err(KinematicsError::OutOfRange { range, limit: max_range });
    }
    Ok(gp)
}

/// Camera pan/tilt expressed in terms of the chain's revolute joints.
///
/// Tilt is negative when the camera looks down; pan is positive to the left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanTiltMap {
    pub pan_joint: usize,
    pub pan_sign: f64,
    pub tilt_joint: usize,
    pub tilt_sign: f64,
}

impl Default for PanTiltMap {
    fn default() -> Self {
        // Joint 2 turns about the vertical axis, joint 3 about the horizontal one.
        Self { pan_joint: 0, pan_sign: 1.0, tilt_joint: 1, tilt_sign: -1.0 }
    }
}

/// Serialized chain description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub links: Vec<DhLink>,
    #[serde(default)]
    pub axis_remap: AxisRemap,
    #[serde(default)]
    pub pan_tilt: PanTiltMap,
}

impl Default for ChainConfig {
    fn default() -> Self {
        webot_chain()
    }
}

/// The default telepresence mast: a fixed offset to the head, then pan and
/// tilt joints, with the optical axis along the terminal +Y.
///
/// The theta offsets put the optical axis level and facing forward with the
/// image upright at zero pan and tilt.
pub fn webot_chain() -> ChainConfig {
    ChainConfig {
        links: vec![
            DhLink::fixed(0.05, 1.10, 0.0, 0.0),
            DhLink::revolute(0.03, 0.0, FRAC_PI_2, PI),
            DhLink::revolute(0.02, 0.0, 0.0, FRAC_PI_2),
        ],
        axis_remap: AxisRemap::ForwardY,
        pan_tilt: PanTiltMap::default(),
    }
}

impl ChainConfig {
    pub fn from_json(text: &str) -> Result<Self, crate::config::ConfigError> {
        let cfg: ChainConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chain config serializes")
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        for l in &self.links {
            l.validate()?;
        }
        let n = revolute_count(&self.links);
        if self.pan_tilt.pan_joint >= n || self.pan_tilt.tilt_joint >= n {
            return Err(KinematicsError::InvalidLink("pan/tilt joint index out of range"));
        }
        Ok(())
    }

    pub fn revolute_count(&self) -> usize {
        revolute_count(&self.links)
    }

    /// Joint state for a physical pan/tilt; unmapped joints stay at zero.
    pub fn joints_for(&self, pan: f64, tilt: f64) -> JointState {
        let mut q = vec![0.0; self.revolute_count()];
        q[self.pan_tilt.pan_joint] += self.pan_tilt.pan_sign * pan;
        q[self.pan_tilt.tilt_joint] += self.pan_tilt.tilt_sign * tilt;
        JointState { q }
    }

    pub fn transform(&self, joints: &JointState) -> Result<Transform, KinematicsError> {
        chain_transform(&self.links, joints)
    }
}

/// Clicked pixel to floor point in the base frame.
pub fn pixel_to_ground(
    model: &CameraModel,
    chain: &[DhLink],
    joints: &JointState,
    remap: AxisRemap,
    px: PixelPoint,
) -> Result<GroundPoint, KinematicsError> {
    let t = chain_transform(chain, joints)?;
    let ray = camgeom::pixel_to_ray(model, px)?;
    let (p0, p1) = camera_ray_in_base(&t, remap, &ray);
    intersect_ground(&p0, &p1)
}

/// A camera on its mount at one joint configuration, with the base-to-optical
/// transform cached for repeated projections.
#[derive(Debug, Clone)]
pub struct CameraRig {
    pub model: CameraModel,
    pub remap: AxisRemap,
    pub joints: JointState,
    base_from_mount: Transform,
    optical_from_base: Transform,
}

impl CameraRig {
    pub fn new(
        model: CameraModel,
        chain: &ChainConfig,
        joints: JointState,
    ) -> Result<Self, KinematicsError> {
        let base_from_mount = chain.transform(&joints)?;
        let mut remap4 = Matrix4::identity();
        remap4.fixed_view_mut::<3, 3>(0, 0).copy_from(&chain.axis_remap.matrix());
        let optical_from_base = Transform(remap4) * base_from_mount.inverse();
        Ok(Self { model, remap: chain.axis_remap, joints, base_from_mount, optical_from_base })
    }

    pub fn with_pan_tilt(
        model: CameraModel,
        chain: &ChainConfig,
        pan: f64,
        tilt: f64,
    ) -> Result<Self, KinematicsError> {
        Self::new(model, chain, chain.joints_for(pan, tilt))
    }

    pub fn base_from_mount(&self) -> &Transform {
        &self.base_from_mount
    }

    pub fn camera_position(&self) -> Vector3<f64> {
        self.base_from_mount.translation_part()
    }

    pub fn base_to_optical(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.optical_from_base.apply(p)
    }

    /// Projects a base-frame point to a (possibly out-of-frame) pixel.
    pub fn project_base(&self, p: &Vector3<f64>) -> Result<PixelPoint, CameraError> {
        camgeom::project(&self.model, &self.base_to_optical(p))
    }

    pub fn pixel_to_ground(&self, px: PixelPoint) -> Result<GroundPoint, KinematicsError> {
        let ray = camgeom::pixel_to_ray(&self.model, px)?;
        let (p0, p1) = camera_ray_in_base(&self.base_from_mount, self.remap, &ray);
        intersect_ground(&p0, &p1)
    }

    /// Base-frame direction of the viewing ray through `px`.
    pub fn pixel_direction(&self, px: PixelPoint) -> Result<Vector3<f64>, CameraError> {
        let ray = camgeom::pixel_to_ray(&self.model, px)?;
        let mount = self.remap.optical_to_mount(&ray.direction);
        Ok(self.base_from_mount.rotation() * mount)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_4;

    fn tilted_camera_chain(height: f64) -> ChainConfig {
        ChainConfig {
            links: vec![
                DhLink::fixed(0.0, height, 0.0, 0.0),
                DhLink::revolute(0.0, 0.0, FRAC_PI_2, PI),
                DhLink::revolute(0.0, 0.0, 0.0, FRAC_PI_2),
            ],
            axis_remap: AxisRemap::ForwardY,
            pan_tilt: PanTiltMap::default(),
        }
    }

    #[test]
    fn fixed_link_is_pure_translation() {
        let t = link_transform(&DhLink::fixed(0.1, 0.5, 0.0, 0.0), 0.0);
        assert_relative_eq!(t.0, Transform::translation(0.1, 0.0, 0.5).0, epsilon = 0.0);
        // Fixed links ignore the supplied angle.
        let t2 = link_transform(&DhLink::fixed(0.1, 0.5, 0.0, 0.0), 1.0);
        assert_eq!(t, t2);
    }

    #[test]
    fn revolute_quarter_turn() {
        let t = link_transform(&DhLink::revolute(0.0, 0.0, 0.0, 0.0), FRAC_PI_2);
        let expected = Matrix4::new(
            0.0, -1.0, 0.0, 0.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        );
        assert_relative_eq!(t.0, expected, epsilon = 1e-15);
    }

    #[test]
    fn twisted_link_matches_elementary_product() {
        // Independent route: compose the four elementary motions explicitly.
        let (a, alpha, q) = (0.05, FRAC_PI_2, 0.3);
        let rz = Matrix4::from_axis_angle(&Vector3::z_axis(), q);
        let tx = Matrix4::new_translation(&Vector3::new(a, 0.0, 0.0));
        let rx = Matrix4::from_axis_angle(&Vector3::x_axis(), alpha);
        let oracle = rz * tx * rx;
        let t = link_transform(&DhLink::revolute(a, 0.0, alpha, 0.0), q);
        assert_relative_eq!(t.0, oracle, epsilon = 1e-15);
    }

    #[test]
    fn empty_chain_is_identity() {
        let t = chain_transform(&[], &JointState::default()).unwrap();
        assert_eq!(t, Transform::identity());
    }

    #[test]
    fn translations_commute() {
        let a = DhLink::fixed(1.0, 0.0, 0.0, 0.0);
        let b = DhLink::fixed(0.0, 1.0, 0.0, 0.0);
        let ab = chain_transform(&[a, b], &JointState::default()).unwrap();
        let ba = chain_transform(&[b, a], &JointState::default()).unwrap();
        assert_eq!(ab.translation_part(), ba.translation_part());
    }

    #[test]
    fn joint_count_mismatch() {
        let chain = webot_chain();
        let err = chain.transform(&JointState::new(vec![0.0])).unwrap_err();
        assert_eq!(err, KinematicsError::JointCountMismatch { expected: 2, got: 1 });
    }

    #[test]
    fn ray_lift_examples() {
        let ray = CameraRay { origin: Vector3::zeros(), direction: Vector3::new(0.0, 0.0, 1.0) };
        let (p0, p1) = camera_ray_in_base(&Transform::identity(), AxisRemap::Identity, &ray);
        assert_eq!(p0, Vector3::zeros());
        assert_eq!(p1, Vector3::new(0.0, 0.0, 1.0));

        let (p0, _) = camera_ray_in_base(&Transform::translation(0.0, 0.0, 1.2), AxisRemap::Identity, &ray);
        assert_eq!(p0, Vector3::new(0.0, 0.0, 1.2));
    }

    #[test]
    fn remap_is_proper_rotation() {
        let m = AxisRemap::ForwardY.matrix();
        assert_relative_eq!(m * m.transpose(), Matrix3::identity());
        assert_eq!(m.determinant(), 1.0);
        let p = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(AxisRemap::ForwardY.mount_to_optical(&p), Vector3::new(-3.0, -1.0, 2.0));
        assert_eq!(AxisRemap::ForwardY.optical_to_mount(&Vector3::new(-3.0, -1.0, 2.0)), p);
    }

    #[test]
    fn ground_intersection_examples() {
        let gp = intersect_ground(&Vector3::new(0.0, 0.0, 1.0), &Vector3::new(0.0, 1.0, 0.0)).unwrap();
        assert_eq!((gp.x, gp.y), (0.0, 1.0));

        let err = intersect_ground(&Vector3::new(0.0, 0.0, 1.0), &Vector3::new(0.0, 1.0, 1.0)).unwrap_err();
        assert_eq!(err, KinematicsError::AboveHorizon);

        let p0 = Vector3::new(0.0, 0.0, 1.2);
        let p1 = Vector3::new(0.1, 0.9, 0.8);
        let gp = intersect_ground(&p0, &p1).unwrap();
        assert_relative_eq!(gp.x, 0.3, epsilon = 1e-12);
        assert_relative_eq!(gp.y, 2.7, epsilon = 1e-12);
        // Sampling oracle: walk the line in coarse then fine steps until Z crosses zero.
        let mut t = 0.0;
        for step in [1e-1, 1e-3, 1e-5, 1e-7] {
            while (p0 + (p1 - p0) * (t + step)).z > 0.0 {
                t += step;
            }
        }
        assert!((t - 3.0).abs() < 1e-6);
    }

    #[test]
    fn ground_intersection_errors() {
        // Camera below the floor looking further down: the hit is behind it.
        let err = intersect_ground(&Vector3::new(0.0, 0.0, -1.0), &Vector3::new(1.0, 0.0, -2.0)).unwrap_err();
        assert_eq!(err, KinematicsError::BehindCamera);
        // Grazing ray lands far away.
        let err = intersect_ground(&Vector3::new(0.0, 0.0, 1.0), &Vector3::new(1.0, 0.0, 0.95)).unwrap_err();
        assert!(matches!(err, KinematicsError::OutOfRange { .. }));
        let p = Vector3::new(1.0, 1.0, 1.0);
        assert_eq!(intersect_ground(&p, &p).unwrap_err(), KinematicsError::DegenerateRay);
    }

    #[test]
    fn forty_five_degree_camera_lands_one_height_ahead() {
        let chain = tilted_camera_chain(1.0);
        let model = CameraModel::default();
        let joints = chain.joints_for(0.0, -FRAC_PI_4);
        let px = PixelPoint::new(model.cx, model.cy);
        let gp = pixel_to_ground(&model, &chain.links, &joints, chain.axis_remap, px).unwrap();
        assert_relative_eq!(gp.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(gp.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn level_camera_center_pixel_is_above_horizon() {
        let chain = tilted_camera_chain(1.0);
        let model = CameraModel::default();
        let rig = CameraRig::with_pan_tilt(model, &chain, 0.0, 0.0).unwrap();
        let err = rig.pixel_to_ground(PixelPoint::new(model.cx, model.cy)).unwrap_err();
        assert_eq!(err, KinematicsError::AboveHorizon);
    }

    #[test]
    fn default_mount_orientation() {
        let chain = webot_chain();
        let rig = CameraRig::with_pan_tilt(CameraModel::default(), &chain, 0.0, 0.0).unwrap();
        let r = rig.base_from_mount().rotation() * AxisRemap::ForwardY.matrix().transpose();
        // Columns of base_R_optical: image right, image down, optical axis.
        assert_relative_eq!(r.column(0).into_owned(), Vector3::new(0.0, -1.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(r.column(1).into_owned(), Vector3::new(0.0, 0.0, -1.0), epsilon = 1e-15);
        assert_relative_eq!(r.column(2).into_owned(), Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-15);

        // Positive pan looks left, negative tilt looks down.
        let left = CameraRig::with_pan_tilt(CameraModel::default(), &chain, 0.3, 0.0).unwrap();
        let axis = left.pixel_direction(PixelPoint::new(319.5, 239.5)).unwrap();
        assert!(axis.y > 0.0);
        let down = CameraRig::with_pan_tilt(CameraModel::default(), &chain, 0.0, -0.3).unwrap();
        let axis = down.pixel_direction(PixelPoint::new(319.5, 239.5)).unwrap();
        assert!(axis.z < 0.0);
        assert_relative_eq!(axis.z, -(0.3f64).sin(), epsilon = 1e-12);
    }

    #[test]
    fn rig_projection_round_trip() {
        let chain = webot_chain();
        let rig = CameraRig::with_pan_tilt(CameraModel::default(), &chain, 0.1, -0.5).unwrap();
        let target = Vector3::new(2.0, 0.4, 0.0);
        let px = rig.project_base(&target).unwrap();
        let gp = rig.pixel_to_ground(px).unwrap();
        assert_relative_eq!(gp.x, target.x, epsilon = 1e-9);
        assert_relative_eq!(gp.y, target.y, epsilon = 1e-9);
    }

    #[test]
    fn chain_config_json() {
        let text = r#"{
            "links": [
                {"a": 0.05, "d": 1.1, "alpha": 0.0, "theta_offset": 0.0, "joint": "fixed"},
                {"a": 0.03, "d": 0.0, "alpha": 1.5707963267948966, "theta_offset": 3.141592653589793, "joint": "revolute"},
                {"a": 0.02, "d": 0.0, "alpha": 0.0, "theta_offset": 1.5707963267948966, "joint": "revolute"}
            ],
            "axis_remap": "paper_eq10"
        }"#;
        let cfg = ChainConfig::from_json(text).unwrap();
        assert_eq!(cfg, webot_chain());
        assert_eq!(ChainConfig::from_json(&cfg.to_json()).unwrap(), cfg);

        let bad = r#"{"links":[{"a":0,"d":0,"alpha":4.0,"joint":"revolute"}]}"#;
        assert!(ChainConfig::from_json(bad).is_err());
        let remap = r#"{"links":[{"a":0,"d":1,"alpha":0,"joint":"revolute"}],"axis_remap":"identity","pan_tilt":{"pan_joint":0,"pan_sign":1,"tilt_joint":0,"tilt_sign":1}}"#;
        assert_eq!(ChainConfig::from_json(remap).unwrap().axis_remap, AxisRemap::Identity);
    }
}
