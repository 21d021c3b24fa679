//! Frame conventions, planar poses, 4x4 homogeneous transforms and camera
//! calibration.
//!
//! Two vehicle frame conventions are supported:
//!
//! * `RH_FLU_ROOF`: right-handed, X forward, Y left, Z up, origin at the
//!   centre of the roof (nuScenes style).
//! * `LH_FRU_WHEEL`: left-handed, X forward, Y right, Z up, origin on the
//!   wheel contact plane (CARLA style).
//!
//! Converting between them negates the lateral axis and yaw, and shifts Z by
//! the roof height.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("matrix is not invertible")]
    NonInvertible,
    #[error("degenerate intrinsics: fx={fx}, fy={fy}")]
    DegenerateIntrinsics { fx: f64, fy: f64 },
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error("invalid frame convention: {0}")]
    InvalidConvention(String),
    #[error("roof height must be positive and finite, got {0}")]
    InvalidRoofOffset(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Handedness {
    Right,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LateralAxis {
    LeftPositive,
    RightPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginRef {
    RoofCenter,
    WheelContactPlane,
}

/// Axis semantics and origin reference of a vehicle frame. X forward and Z
/// up are shared by every convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FrameConvention {
    handedness: Handedness,
    lateral_axis: LateralAxis,
    origin_ref: OriginRef,
}

impl FrameConvention {
    /// nuScenes-style: right-handed, Y left, origin at roof centre.
    pub const RH_FLU_ROOF: FrameConvention = FrameConvention {
        handedness: Handedness::Right,
        lateral_axis: LateralAxis::LeftPositive,
        origin_ref: OriginRef::RoofCenter,
    };

    /// CARLA-style: left-handed, Y right, origin on the wheel contact plane.
    pub const LH_FRU_WHEEL: FrameConvention = FrameConvention {
        handedness: Handedness::Left,
        lateral_axis: LateralAxis::RightPositive,
        origin_ref: OriginRef::WheelContactPlane,
    };

    pub const PRESETS: [FrameConvention; 2] = [Self::RH_FLU_ROOF, Self::LH_FRU_WHEEL];

    /// Only the two named presets are valid conventions.
    pub fn new(
        handedness: Handedness,
        lateral_axis: LateralAxis,
        origin_ref: OriginRef,
    ) -> Result<Self, GeometryError> {
        let c = FrameConvention {
            handedness,
            lateral_axis,
            origin_ref,
        };
        if Self::PRESETS.contains(&c) {
            Ok(c)
        } else {
            Err(GeometryError::InvalidConvention(format!(
                "{handedness:?}/{lateral_axis:?}/{origin_ref:?} is not a named preset"
            )))
        }
    }

    pub fn handedness(&self) -> Handedness {
        self.handedness
    }

    pub fn lateral_axis(&self) -> LateralAxis {
        self.lateral_axis
    }

    pub fn origin_ref(&self) -> OriginRef {
        self.origin_ref
    }

    pub fn name(&self) -> &'static str {
        match self.handedness {
            Handedness::Right => "RH_FLU_ROOF",
            Handedness::Left => "LH_FRU_WHEEL",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, GeometryError> {
        match name {
            "RH_FLU_ROOF" => Ok(Self::RH_FLU_ROOF),
            "LH_FRU_WHEEL" => Ok(Self::LH_FRU_WHEEL),
            other => Err(GeometryError::InvalidConvention(format!(
                "unknown preset {other:?}"
            ))),
        }
    }

    /// Homogeneous matrix mapping points expressed in `self` to `to`.
    pub fn point_map(&self, to: FrameConvention, off: RoofOffset) -> Transform4 {
        if *self == to {
            return Transform4::identity();
        }
        // Z shift: wheel plane -> roof centre subtracts the roof height.
        let dz = match (self.origin_ref, to.origin_ref) {
            (OriginRef::WheelContactPlane, OriginRef::RoofCenter) => -off.h_roof(),
            (OriginRef::RoofCenter, OriginRef::WheelContactPlane) => off.h_roof(),
            _ => 0.0,
        };
        let sy = if self.lateral_axis == to.lateral_axis {
            1.0
        } else {
            -1.0
        };
        Transform4::from_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, sy, 0.0, 0.0],
            [0.0, 0.0, 1.0, dz],
            [0.0, 0.0, 0.0, 1.0],
        ])
    }

    /// Whether converting to `to` mirrors the lateral axis.
    pub fn flips_lateral(&self, to: FrameConvention) -> bool {
        self.lateral_axis != to.lateral_axis
    }
}

impl fmt::Display for FrameConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl TryFrom<String> for FrameConvention {
    type Error = GeometryError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::from_name(&value)
    }
}

impl From<FrameConvention> for String {
    fn from(c: FrameConvention) -> String {
        c.name().to_string()
    }
}

/// Height of the roof centre above the wheel contact plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RoofOffset(f64);

impl RoofOffset {
    pub const DEFAULT_H_ROOF: f64 = 1.5;

    pub fn new(h_roof: f64) -> Result<Self, GeometryError> {
        if h_roof.is_finite() && h_roof > 0.0 {
            Ok(RoofOffset(h_roof))
        } else {
            Err(GeometryError::InvalidRoofOffset(h_roof))
        }
    }

    pub fn h_roof(&self) -> f64 {
        self.0
    }
}

impl Default for RoofOffset {
    fn default() -> Self {
        RoofOffset(Self::DEFAULT_H_ROOF)
    }
}

impl TryFrom<f64> for RoofOffset {
    type Error = GeometryError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        RoofOffset::new(v)
    }
}

impl From<RoofOffset> for f64 {
    fn from(o: RoofOffset) -> f64 {
        o.0
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    if !a.is_finite() {
        return a;
    }
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Planar pose with height. Yaw is about the up axis and kept in (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64, yaw: f64) -> Result<Self, GeometryError> {
        let p = Pose {
            x,
            y,
            z,
            yaw: normalize_angle(yaw),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn planar(x: f64, y: f64, yaw: f64) -> Self {
        Pose {
            x,
            y,
            z: 0.0,
            yaw: normalize_angle(yaw),
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if [self.x, self.y, self.z, self.yaw].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(GeometryError::InvalidPose(format!("{self:?}")))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.validate().is_ok()
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// Expresses `self` (given in some frame F) in the planar frame attached
    /// to `origin` (also given in F). Z is left untouched.
    pub fn relative_to(&self, origin: &Pose) -> Pose {
        let (s, c) = origin.yaw.sin_cos();
        let dx = self.x - origin.x;
        let dy = self.y - origin.y;
        Pose {
            x: c * dx + s * dy,
            y: -s * dx + c * dy,
            z: self.z,
            yaw: normalize_angle(self.yaw - origin.yaw),
        }
    }
}

/// Converts a pose between the two frame presets.
pub fn convert_pose(
    p: Pose,
    from: FrameConvention,
    to: FrameConvention,
    off: RoofOffset,
) -> Result<Pose, GeometryError> {
    p.validate()?;
    if from == to {
        return Ok(p);
    }
    let flip = from.flips_lateral(to);
    let dz = match (from.origin_ref(), to.origin_ref()) {
        (OriginRef::WheelContactPlane, OriginRef::RoofCenter) => -off.h_roof(),
        (OriginRef::RoofCenter, OriginRef::WheelContactPlane) => off.h_roof(),
        _ => 0.0,
    };
    Ok(Pose {
        x: p.x,
        y: if flip { -p.y } else { p.y },
        z: p.z + dz,
        yaw: if flip { normalize_angle(-p.yaw) } else { p.yaw },
    })
}

/// Converts a planar point (ground-plane coordinates) between presets. Only
/// the lateral axis is affected.
pub fn convert_xy(p: [f64; 2], from: FrameConvention, to: FrameConvention) -> [f64; 2] {
    if from.flips_lateral(to) {
        [p[0], -p[1]]
    } else {
        p
    }
}

/// Row-major 4x4 homogeneous matrix with bottom row (0, 0, 0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 16]", into = "[f64; 16]")]
pub struct Transform4 {
    m: [f64; 16],
}

impl Transform4 {
    pub fn new(m: [f64; 16]) -> Result<Self, GeometryError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidTransform(
                "non-finite entry".to_string(),
            ));
        }
        if m[12] != 0.0 || m[13] != 0.0 || m[14] != 0.0 || m[15] != 1.0 {
            return Err(GeometryError::InvalidTransform(format!(
                "bottom row must be (0, 0, 0, 1), got ({}, {}, {}, {})",
                m[12], m[13], m[14], m[15]
            )));
        }
        Ok(Transform4 { m })
    }

    pub fn identity() -> Self {
        let mut m = [0.0; 16];
        m[0] = 1.0;
        m[5] = 1.0;
        m[10] = 1.0;
        m[15] = 1.0;
        Transform4 { m }
    }

    /// Panics if the bottom row is not homogeneous; use [`Transform4::new`]
    /// for untrusted input.
    pub fn from_rows(rows: [[f64; 4]; 4]) -> Self {
        let mut m = [0.0; 16];
        for (r, row) in rows.iter().enumerate() {
            m[r * 4..r * 4 + 4].copy_from_slice(row);
        }
        Transform4::new(m).expect("homogeneous rows")
    }

    pub fn translation(tx: f64, ty: f64, tz: f64) -> Self {
        Transform4::from_rows([
            [1.0, 0.0, 0.0, tx],
            [0.0, 1.0, 0.0, ty],
            [0.0, 0.0, 1.0, tz],
            [0.0, 0.0, 0.0, 1.0],
        ])
    }

    pub fn rotation_z(yaw: f64) -> Self {
        let (s, c) = yaw.sin_cos();
        Transform4::from_rows([
            [c, -s, 0.0, 0.0],
            [s, c, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
    }

    /// Rotation from its 3x3 block and a translation.
    pub fn from_rotation_translation(r: [[f64; 3]; 3], t: [f64; 3]) -> Self {
        Transform4::from_rows([
            [r[0][0], r[0][1], r[0][2], t[0]],
            [r[1][0], r[1][1], r[1][2], t[1]],
            [r[2][0], r[2][1], r[2][2], t[2]],
            [0.0, 0.0, 0.0, 1.0],
        ])
    }

    /// Embeds a 3x3 matrix into the upper-left block of a 4x4 identity.
    pub fn hom3(k: [[f64; 3]; 3]) -> Self {
        Self::from_rotation_translation(k, [0.0; 3])
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.m[row * 4 + col]
    }

    pub fn as_array(&self) -> &[f64; 16] {
        &self.m
    }

    pub fn translation_part(&self) -> [f64; 3] {
        [self.m[3], self.m[7], self.m[11]]
    }

    pub fn transform_point(&self, p: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.get(r, 0) * p[0] + self.get(r, 1) * p[1] + self.get(r, 2) * p[2] + self.get(r, 3);
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Transform4) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn to_matrix(self) -> Matrix4<f64> {
        Matrix4::from_row_slice(&self.m)
    }

    fn from_matrix(m: &Matrix4<f64>) -> Self {
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = m[(r, c)];
            }
        }
        // Keep the homogeneous row exact.
        out[12] = 0.0;
        out[13] = 0.0;
        out[14] = 0.0;
        out[15] = 1.0;
        Transform4 { m: out }
    }
}

impl TryFrom<[f64; 16]> for Transform4 {
    type Error = GeometryError;
    fn try_from(m: [f64; 16]) -> Result<Self, Self::Error> {
        Transform4::new(m)
    }
}

impl From<Transform4> for [f64; 16] {
    fn from(t: Transform4) -> [f64; 16] {
        t.m
    }
}

/// Matrix product `a * b`.
pub fn compose(a: &Transform4, b: &Transform4) -> Transform4 {
    Transform4::from_matrix(&(a.to_matrix() * b.to_matrix()))
}

pub fn invert(t: &Transform4) -> Result<Transform4, GeometryError> {
    let inv = t
        .to_matrix()
        .try_inverse()
        .ok_or(GeometryError::NonInvertible)?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::NonInvertible);
    }
    Ok(Transform4::from_matrix(&inv))
}

/// The six surround views, in prompt order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CameraView {
    #[serde(rename = "CAM_FRONT")]
    Front,
    #[serde(rename = "CAM_FRONT_LEFT")]
    FrontLeft,
    #[serde(rename = "CAM_FRONT_RIGHT")]
    FrontRight,
    #[serde(rename = "CAM_BACK")]
    Back,
    #[serde(rename = "CAM_BACK_LEFT")]
    BackLeft,
    #[serde(rename = "CAM_BACK_RIGHT")]
    BackRight,
}

impl CameraView {
    pub const ALL: [CameraView; 6] = [
        CameraView::Front,
        CameraView::FrontLeft,
        CameraView::FrontRight,
        CameraView::Back,
        CameraView::BackLeft,
        CameraView::BackRight,
    ];

    /// Human-readable name used in prompts.
    pub fn view_name(&self) -> &'static str {
        match self {
            CameraView::Front => "front view",
            CameraView::FrontLeft => "front left view",
            CameraView::FrontRight => "front right view",
            CameraView::Back => "back view",
            CameraView::BackLeft => "back left view",
            CameraView::BackRight => "back right view",
        }
    }

    /// Viewing direction in a right-handed, Y-left vehicle frame.
    pub fn nominal_yaw(&self) -> f64 {
        match self {
            CameraView::Front => 0.0,
            CameraView::FrontLeft => 55f64.to_radians(),
            CameraView::FrontRight => -55f64.to_radians(),
            CameraView::Back => PI,
            CameraView::BackLeft => 110f64.to_radians(),
            CameraView::BackRight => -110f64.to_radians(),
        }
    }
}

pub const DEFAULT_IMAGE_WIDTH: u32 = 1600;
pub const DEFAULT_IMAGE_HEIGHT: u32 = 900;

/// Pinhole intrinsics plus the camera-to-ego extrinsic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraCalibration {
    pub name: CameraView,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub t_cam_to_ego: Transform4,
    pub width: u32,
    pub height: u32,
}

impl CameraCalibration {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(GeometryError::DegenerateIntrinsics {
                fx: self.fx,
                fy: self.fy,
            });
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(GeometryError::InvalidTransform(
                "non-finite principal point".to_string(),
            ));
        }
        Ok(())
    }

    /// K embedded in a 4x4 identity.
    pub fn intrinsic_hom(&self) -> Transform4 {
        Transform4::hom3([
            [self.fx, 0.0, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ])
    }

    /// K^-1 embedded in a 4x4 identity, computed in closed form.
    pub fn inverse_intrinsic_hom(&self) -> Result<Transform4, GeometryError> {
        if self.fx == 0.0 || self.fy == 0.0 || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(GeometryError::DegenerateIntrinsics {
                fx: self.fx,
                fy: self.fy,
            });
        }
        Ok(Transform4::hom3([
            [1.0 / self.fx, 0.0, -self.cx / self.fx],
            [0.0, 1.0 / self.fy, -self.cy / self.fy],
            [0.0, 0.0, 1.0],
        ]))
    }
}

/// `T_cam_to_ego * hom(K^-1)`: maps homogeneous pixel rays into the ego frame.
pub fn image_to_ego_matrix(c: &CameraCalibration) -> Result<Transform4, GeometryError> {
    let k_inv = c.inverse_intrinsic_hom()?;
    Ok(compose(&c.t_cam_to_ego, &k_inv))
}

/// Re-expresses a camera extrinsic after an ego frame change. The ego side is
/// mapped by the point map, and when the lateral axis flips the camera frame
/// is mirrored too so the rotation block stays proper.
pub fn convert_extrinsic(
    t_cam_to_ego: &Transform4,
    from: FrameConvention,
    to: FrameConvention,
    off: RoofOffset,
) -> Transform4 {
    if from == to {
        return *t_cam_to_ego;
    }
    let ego_map = from.point_map(to, off);
    let cam_mirror = if from.flips_lateral(to) {
        Transform4::from_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
    } else {
        Transform4::identity()
    };
    compose(&compose(&ego_map, t_cam_to_ego), &cam_mirror)
}

/// Camera looking along `yaw` in a right-handed Y-left vehicle frame, with a
/// standard optical frame (x right, y down, z forward).
pub fn optical_extrinsic(yaw: f64, position: [f64; 3]) -> Transform4 {
    let (s, c) = yaw.sin_cos();
    // Columns: optical x (right), optical y (down), optical z (forward).
    Transform4::from_rotation_translation(
        [[s, 0.0, c], [-c, 0.0, s], [0.0, -1.0, 0.0]],
        position,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const RH: FrameConvention = FrameConvention::RH_FLU_ROOF;
    const LH: FrameConvention = FrameConvention::LH_FRU_WHEEL;

    fn off() -> RoofOffset {
        RoofOffset::new(1.5).unwrap()
    }

    /// Independent oracle: pose as a 4x4 (rotation about Z + translation),
    /// mapped by the reflection/offset matrix and conjugated.
    fn convert_by_matrix(p: Pose, from: FrameConvention, to: FrameConvention) -> Pose {
        let pose_m = compose(
            &Transform4::translation(p.x, p.y, p.z),
            &Transform4::rotation_z(p.yaw),
        );
        let a = from.point_map(to, off());
        // Same reflection on the body side keeps a proper rotation.
        let mirror = Transform4::from_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]);
        let out = compose(&compose(&a, &pose_m), &mirror);
        let t = out.translation_part();
        Pose::new(t[0], t[1], t[2], out.get(1, 0).atan2(out.get(0, 0))).unwrap()
    }

    #[test]
    fn convert_lh_to_rh_example() {
        let p = Pose::new(10.0, 3.0, 0.5, 0.5236).unwrap();
        let q = convert_pose(p, LH, RH, off()).unwrap();
        assert_eq!(q.x, 10.0);
        assert_eq!(q.y, -3.0);
        assert!((q.z - (-1.0)).abs() < 1e-15);
        assert!((q.yaw + 0.5236).abs() < 1e-15);

        let oracle = convert_by_matrix(p, LH, RH);
        assert!((oracle.x - q.x).abs() < 1e-12);
        assert!((oracle.y - q.y).abs() < 1e-12);
        assert!((oracle.z - q.z).abs() < 1e-12);
        assert!((oracle.yaw - q.yaw).abs() < 1e-12);
    }

    #[test]
    fn convert_identity_and_involution() {
        let p = Pose::new(-4.0, 2.5, 0.1, -2.0).unwrap();
        assert_eq!(convert_pose(p, RH, RH, off()).unwrap(), p);
        assert_eq!(convert_pose(p, LH, LH, off()).unwrap(), p);
        let back = convert_pose(convert_pose(p, LH, RH, off()).unwrap(), RH, LH, off()).unwrap();
        // Lateral and yaw negation are exact; the roof shift may round.
        assert_eq!((back.x, back.y, back.yaw), (p.x, p.y, p.yaw));
        assert!((back.z - p.z).abs() < 1e-12);
    }

    #[test]
    fn convert_pi_yaw_stays_in_range() {
        let p = Pose::new(0.0, 0.0, 0.0, PI).unwrap();
        let q = convert_pose(p, LH, RH, off()).unwrap();
        assert_eq!(q.yaw, PI);
    }

    #[test]
    fn convert_rejects_non_finite() {
        let p = Pose {
            x: f64::NAN,
            y: 0.0,
            z: 0.0,
            yaw: 0.0,
        };
        assert!(matches!(
            convert_pose(p, LH, RH, off()),
            Err(GeometryError::InvalidPose(_))
        ));
    }

    #[test]
    fn convention_presets_only() {
        assert!(FrameConvention::new(Handedness::Right, LateralAxis::RightPositive, OriginRef::RoofCenter).is_err());
        assert_eq!(
            FrameConvention::new(Handedness::Left, LateralAxis::RightPositive, OriginRef::WheelContactPlane).unwrap(),
            LH
        );
        assert_eq!(serde_json::to_string(&RH).unwrap(), "\"RH_FLU_ROOF\"");
        let c: FrameConvention = serde_json::from_str("\"LH_FRU_WHEEL\"").unwrap();
        assert_eq!(c, LH);
        assert!(serde_json::from_str::<FrameConvention>("\"XYZ\"").is_err());
    }

    #[test]
    fn compose_examples() {
        let t = Transform4::translation(1.0, 2.0, 3.0);
        assert_eq!(compose(&Transform4::identity(), &t), t);
        let a = compose(&Transform4::translation(1.0, 0.0, 0.0), &Transform4::translation(0.0, 2.0, 0.0));
        assert_eq!(a, Transform4::translation(1.0, 2.0, 0.0));
        let r = compose(&Transform4::rotation_z(0.7), &t);
        let ri = invert(&r).unwrap();
        assert!(compose(&r, &ri).max_abs_diff(&Transform4::identity()) < 1e-12);
    }

    #[test]
    fn invert_examples() {
        assert_eq!(invert(&Transform4::identity()).unwrap(), Transform4::identity());
        let inv = invert(&Transform4::translation(1.0, 2.0, 3.0)).unwrap();
        assert!(inv.max_abs_diff(&Transform4::translation(-1.0, -2.0, -3.0)) < 1e-15);
        let inv = invert(&Transform4::rotation_z(PI / 2.0)).unwrap();
        assert!(inv.max_abs_diff(&Transform4::rotation_z(-PI / 2.0)) < 1e-15);
        let singular = Transform4::hom3([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 1.0]]);
        assert_eq!(invert(&singular), Err(GeometryError::NonInvertible));
    }

    #[test]
    fn transform_serializes_row_major() {
        let t = Transform4::translation(1.0, 2.0, 3.0);
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, "[1.0,0.0,0.0,1.0,0.0,1.0,0.0,2.0,0.0,0.0,1.0,3.0,0.0,0.0,0.0,1.0]");
        let back: Transform4 = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        let bad = "[1,0,0,0,0,1,0,0,0,0,1,0,0,0,1,1]";
        assert!(serde_json::from_str::<Transform4>(bad).is_err());
    }

    fn calib(fx: f64, fy: f64, cx: f64, cy: f64, t: Transform4) -> CameraCalibration {
        CameraCalibration {
            name: CameraView::Front,
            fx,
            fy,
            cx,
            cy,
            t_cam_to_ego: t,
            width: DEFAULT_IMAGE_WIDTH,
            height: DEFAULT_IMAGE_HEIGHT,
        }
    }

    #[test]
    fn image_to_ego_examples() {
        let m = image_to_ego_matrix(&calib(1.0, 1.0, 0.0, 0.0, Transform4::identity())).unwrap();
        assert_eq!(m, Transform4::identity());

        let m = image_to_ego_matrix(&calib(2.0, 2.0, 3.0, 4.0, Transform4::identity())).unwrap();
        let expected = Transform4::hom3([[0.5, 0.0, -1.5], [0.0, 0.5, -2.0], [0.0, 0.0, 1.0]]);
        assert!(m.max_abs_diff(&expected) < 1e-15);

        let m = image_to_ego_matrix(&calib(1.0, 1.0, 0.0, 0.0, Transform4::translation(0.4, -0.2, 1.6))).unwrap();
        assert_eq!(m.translation_part(), [0.4, -0.2, 1.6]);

        assert!(matches!(
            image_to_ego_matrix(&calib(0.0, 1.0, 0.0, 0.0, Transform4::identity())),
            Err(GeometryError::DegenerateIntrinsics { .. })
        ));
    }

    #[test]
    fn image_to_ego_recovers_extrinsic() {
        let t = compose(&Transform4::translation(1.2, 0.3, -0.1), &optical_extrinsic(0.9, [0.0; 3]));
        let c = calib(1266.4, 1260.1, 816.3, 491.5, t);
        let m = image_to_ego_matrix(&c).unwrap();
        let back = compose(&m, &c.intrinsic_hom());
        assert!(back.max_abs_diff(&t) < 1e-10);
    }

    #[test]
    fn extrinsic_conversion_is_involutive_and_proper() {
        let t = optical_extrinsic(0.8, [1.0, 0.5, -0.2]);
        let l = convert_extrinsic(&t, RH, LH, off());
        let back = convert_extrinsic(&l, LH, RH, off());
        assert!(back.max_abs_diff(&t) < 1e-15);
        // The camera centre maps like a point.
        let c = l.translation_part();
        assert_eq!(c, [1.0, -0.5, 1.3]);
        let m = l;
        let det = m.get(0, 0) * (m.get(1, 1) * m.get(2, 2) - m.get(1, 2) * m.get(2, 1))
            - m.get(0, 1) * (m.get(1, 0) * m.get(2, 2) - m.get(1, 2) * m.get(2, 0))
            + m.get(0, 2) * (m.get(1, 0) * m.get(2, 1) - m.get(1, 1) * m.get(2, 0));
        assert!((det - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_angle_range() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(0.1 - 2.0 * PI) - 0.1).abs() < 1e-12);
    }
}
