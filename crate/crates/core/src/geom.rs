//! Rotation representations, rigid 6-DOF poses and pose distances.
//!
//! Internally every rotation is carried as an axis-angle vector `θ·e`; Euler
//! angles only appear at the I/O boundary. Euler angles follow the intrinsic
//! z-y-x (yaw-pitch-roll) convention, `R = Rz(φz)·Ry(φy)·Rx(φx)`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::uncert;

pub type Vec3 = Vector3<f64>;

/// Intrinsic z-y-x Euler angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerZYX {
    pub phi_x: f64,
    pub phi_y: f64,
    pub phi_z: f64,
}

impl EulerZYX {
    pub fn new(phi_x: f64, phi_y: f64, phi_z: f64) -> Self {
        Self { phi_x, phi_y, phi_z }
    }

    pub fn from_degrees(x: f64, y: f64, z: f64) -> Self {
        Self::new(x.to_radians(), y.to_radians(), z.to_radians())
    }

    pub fn as_vector(&self) -> Vec3 {
        Vec3::new(self.phi_x, self.phi_y, self.phi_z)
    }
}

/// Rotation vector `θ·e`, `‖v‖ = θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle(pub Vec3);

impl AxisAngle {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vec3::new(x, y, z))
    }

    pub fn identity() -> Self {
        Self(Vec3::zeros())
    }

    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    /// Equivalent rotation with `θ ∈ [0, π]`.
    pub fn canonical(&self) -> Self {
        if self.angle() <= PI {
            *self
        } else {
            rotation_to_axis_angle(&axis_angle_to_rotation(self))
        }
    }
}

/// Proper orthonormal 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    const TOL: f64 = 1e-10;

    /// Validates orthonormality and `det = +1` within `1e-10`.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("rotation matrix has non-finite entries".into()));
        }
        let ortho = (m.transpose() * m - Matrix3::identity()).abs().max();
        let det = m.determinant();
        if ortho > Self::TOL || (det - 1.0).abs() > Self::TOL {
            return Err(Error::InvalidArgument(format!(
                "not a rotation matrix (|MᵀM − I| = {ortho:e}, det = {det})"
            )));
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Matrix3<f64> {
        self.0
    }
}

/// Unit quaternion `a + b·i + c·j + d·k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitQuaternion {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl UnitQuaternion {
    pub fn dot(&self, other: &Self) -> f64 {
        self.a * other.a + self.b * other.b + self.c * other.c + self.d * other.d
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Rigid transform: translation in metres plus an axis-angle rotation.
///
/// Maps points from the child frame into the parent frame, `p' = R·p + r`.
/// Serialised as the flat parameter array `[rx, ry, rz, θex, θey, θez]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 6]", into = "[f64; 6]")]
pub struct Pose6 {
    pub r: Vec3,
    pub rot: AxisAngle,
}

impl Pose6 {
    pub fn new(r: Vec3, rot: AxisAngle) -> Self {
        Self { r, rot }
    }

    pub fn identity() -> Self {
        Self::new(Vec3::zeros(), AxisAngle::identity())
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::new(Vec3::new(x, y, z), AxisAngle::identity())
    }

    /// `[rx, ry, rz, θex, θey, θez]`.
    pub fn from_params(p: &[f64; 6]) -> Self {
        Self::new(Vec3::new(p[0], p[1], p[2]), AxisAngle::new(p[3], p[4], p[5]))
    }

    pub fn params(&self) -> [f64; 6] {
        [self.r.x, self.r.y, self.r.z, self.rot.0.x, self.rot.0.y, self.rot.0.z]
    }

    /// Translation plus Euler angles, converted to axis-angle.
    pub fn from_euler(r: Vec3, e: EulerZYX) -> Result<Self> {
        let rot = rotation_to_axis_angle(&euler_to_rotation(e)?);
        Ok(Self::new(r, rot))
    }

    pub fn rotation(&self) -> RotationMatrix {
        axis_angle_to_rotation(&self.rot)
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|v| v.is_finite())
    }
}

impl From<[f64; 6]> for Pose6 {
    fn from(p: [f64; 6]) -> Self {
        Self::from_params(&p)
    }
}

impl From<Pose6> for [f64; 6] {
    fn from(p: Pose6) -> Self {
        p.params()
    }
}

/// Translation and geodesic rotation distance between two poses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseDistance {
    pub d: f64,
    pub phi: f64,
}

fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn euler_to_rotation(e: EulerZYX) -> Result<RotationMatrix> {
    if !e.as_vector().iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("Euler angles must be finite".into()));
    }
    Ok(RotationMatrix(rot_z(e.phi_z) * rot_y(e.phi_y) * rot_x(e.phi_x)))
}

/// Wraps `−π` onto `π` so angles land in `(−π, π]`.
fn half_open(a: f64) -> f64 {
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

// Below this distance from |R20| = 1 the pitch is treated as exactly ±π/2.
const GIMBAL_EPS: f64 = 1e-12;

/// Inverse of [`euler_to_rotation`]; `φy ∈ [−π/2, π/2]`, and `φx = 0` at gimbal lock.
pub fn rotation_to_euler(r: &RotationMatrix) -> EulerZYX {
    let m = &r.0;
    let r20 = m[(2, 0)].clamp(-1.0, 1.0);
    if 1.0 - r20.abs() <= GIMBAL_EPS {
        let phi_y = if r20 < 0.0 { FRAC_PI_2 } else { -FRAC_PI_2 };
        let phi_z = (-m[(0, 1)]).atan2(m[(1, 1)]);
        return EulerZYX::new(0.0, phi_y, half_open(phi_z));
    }
    let phi_y = (-r20).asin();
    let phi_x = m[(2, 1)].atan2(m[(2, 2)]);
    let phi_z = m[(1, 0)].atan2(m[(0, 0)]);
    EulerZYX::new(half_open(phi_x), phi_y, half_open(phi_z))
}

fn skew(v: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// `R = I + sin θ·S + (1 − cos θ)·S²` with `S` the skew matrix of the unit axis.
pub fn axis_angle_to_rotation(v: &AxisAngle) -> RotationMatrix {
    let theta = v.0.norm();
    if theta == 0.0 {
        return RotationMatrix::identity();
    }
    let s = skew(&(v.0 / theta));
    let (sin, cos) = theta.sin_cos();
    RotationMatrix(Matrix3::identity() + s * sin + s * s * (1.0 - cos))
}

/// Makes the first clearly nonzero component positive.
fn fix_axis_sign(e: Vec3) -> Vec3 {
    match e.iter().find(|c| c.abs() > 1e-9) {
        Some(c) if *c < 0.0 => -e,
        _ => e,
    }
}

pub fn rotation_to_axis_angle(r: &RotationMatrix) -> AxisAngle {
    let m = &r.0;
    // sin θ · e
    let w = Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]) * 0.5;
    let sin = w.norm();
    let cos = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = sin.atan2(cos);
    if sin == 0.0 && cos > 0.0 {
        return AxisAngle::identity();
    }
    if cos > 0.0 {
        return AxisAngle(w * (theta / sin));
    }
    // θ ≥ π/2: the antisymmetric part loses precision, take the axis from
    // the symmetric part eeᵀ = (S − cos θ·I) / (1 − cos θ).
    let sym = (m + m.transpose()) * 0.5;
    let outer = (sym - Matrix3::identity() * cos) / (1.0 - cos);
    let k = (0..3)
        .max_by(|&a, &b| outer[(a, a)].total_cmp(&outer[(b, b)]))
        .unwrap_or(0);
    let mut e: Vec3 = outer.column(k).into_owned() / outer[(k, k)].max(0.0).sqrt();
    e.normalize_mut();
    if sin > 1e-12 {
        if e.dot(&w) < 0.0 {
            e = -e;
        }
    } else {
        e = fix_axis_sign(e);
    }
    AxisAngle(e * theta)
}

pub fn axis_angle_to_quaternion(v: &AxisAngle) -> UnitQuaternion {
    let theta = v.0.norm();
    if theta == 0.0 {
        return UnitQuaternion { a: 1.0, b: 0.0, c: 0.0, d: 0.0 };
    }
    let (s, c) = (theta * 0.5).sin_cos();
    let e = v.0 / theta;
    UnitQuaternion { a: c, b: e.x * s, c: e.y * s, d: e.z * s }
}

pub fn transform_point(t: &Pose6, p: &Vec3) -> Vec3 {
    t.rotation().0 * p + t.r
}

/// Pose equivalent to applying `inner` first, then `outer`.
pub fn compose(outer: &Pose6, inner: &Pose6) -> Pose6 {
    let ro = outer.rotation().0;
    let ri = inner.rotation().0;
    let rot = rotation_to_axis_angle(&RotationMatrix(ro * ri));
    Pose6::new(ro * inner.r + outer.r, rot)
}

pub fn pose_distance(t1: &Pose6, t2: &Pose6) -> PoseDistance {
    let d = (t2.r - t1.r).norm();
    let q1 = axis_angle_to_quaternion(&t1.rot);
    let q2 = axis_angle_to_quaternion(&t2.rot);
    // 2·acos(|q1·q2|), evaluated through the relative quaternion so that
    // nearby rotations keep full precision
    let (v1, v2) = (Vec3::new(q1.b, q1.c, q1.d), Vec3::new(q2.b, q2.c, q2.d));
    let im = v2 * q1.a - v1 * q2.a - v1.cross(&v2);
    let dot = q1.dot(&q2).abs();
    PoseDistance { d, phi: 2.0 * im.norm().atan2(dot) }
}

/// Maps a covariance over Euler angles onto the axis-angle parameters at `e`,
/// `J·Q·Jᵀ` with `J` the finite-difference Jacobian of the conversion.
pub fn euler_cov_to_axis_angle_cov(e: EulerZYX, q_e: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    uncert::check_covariance(&nalgebra::DMatrix::from_column_slice(3, 3, q_e.as_slice()))?;
    let x = nalgebra::DVector::from_column_slice(e.as_vector().as_slice());
    let steps = uncert::metric_steps(x.as_slice());
    let convert = |p: &nalgebra::DVector<f64>| -> Result<nalgebra::DVector<f64>> {
        let r = euler_to_rotation(EulerZYX::new(p[0], p[1], p[2]))?;
        Ok(nalgebra::DVector::from_column_slice(rotation_to_axis_angle(&r).0.as_slice()))
    };
    let j = uncert::numerical_jacobian(convert, &x, &steps)?;
    let j3 = Matrix3::from_iterator(j.iter().copied());
    let out = j3 * q_e * j3.transpose();
    Ok((out + out.transpose()) * 0.5)
}
