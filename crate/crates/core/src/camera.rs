//! Line-scan pinhole camera: intrinsics, projection and pixel back-projection.
//!
//! The model is the ordinary pinhole with `v0 = 0`; a line-scan sensor only
//! reports `u`, but reprojections may land off the scan line (`v ≠ 0`).

use nalgebra::{Matrix3, Matrix3x4, Matrix4x3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Pose6, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    /// Focal length in pixels.
    pub f_px: f64,
    pub u0: f64,
    pub v0: f64,
    pub n_pixels: u32,
    /// Instantaneous field of view, radians per pixel.
    pub ifov: f64,
    /// Millimetres per pixel; converts focal-length uncertainty from mm.
    pub pixel_pitch: f64,
}

impl Intrinsics {
    pub fn new(f_px: f64, u0: f64, n_pixels: u32, ifov: f64, pixel_pitch: f64) -> Result<Self> {
        let intr = Self { f_px, u0, v0: 0.0, n_pixels, ifov, pixel_pitch };
        intr.validate()?;
        Ok(intr)
    }

    /// Builds intrinsics from a focal length in millimetres.
    pub fn from_focal_mm(
        focal_mm: f64,
        pixel_pitch_mm: f64,
        u0: f64,
        n_pixels: u32,
        ifov: f64,
    ) -> Result<Self> {
        if !(pixel_pitch_mm > 0.0) {
            return Err(Error::InvalidArgument("pixel pitch must be positive".into()));
        }
        Self::new(focal_mm / pixel_pitch_mm, u0, n_pixels, ifov, pixel_pitch_mm)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_px > 0.0 && self.f_px.is_finite()) {
            return Err(Error::InvalidArgument(format!("focal length must be positive, got {}", self.f_px)));
        }
        if !(self.u0 >= 0.0 && self.u0 < self.n_pixels as f64) {
            return Err(Error::InvalidArgument(format!(
                "principal point {} outside [0, {})",
                self.u0, self.n_pixels
            )));
        }
        if self.v0 != 0.0 {
            return Err(Error::InvalidArgument("line-scan model requires v0 = 0".into()));
        }
        Ok(())
    }

    pub fn k(&self) -> Matrix3<f64> {
        Matrix3::new(self.f_px, 0.0, self.u0, 0.0, self.f_px, self.v0, 0.0, 0.0, 1.0)
    }

    /// Same camera with a different focal length and principal point.
    pub fn with_fu0(&self, f_px: f64, u0: f64) -> Self {
        Self { f_px, u0, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    /// A line-scan observation, always on the scan line.
    pub fn on_scan_line(u: f64) -> Self {
        Self { u, v: 0.0 }
    }
}

/// World-frame line through the camera centre `p_c` and a second point `p_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray3 {
    pub p_c: Vec3,
    pub p_s: Vec3,
}

impl Ray3 {
    pub fn new(p_c: Vec3, p_s: Vec3) -> Result<Self> {
        if (p_s - p_c).norm() <= 1e-12 {
            return Err(Error::InvalidArgument("ray points coincide".into()));
        }
        Ok(Self { p_c, p_s })
    }

    pub fn direction(&self) -> Vec3 {
        self.p_s - self.p_c
    }

    pub fn point_at(&self, t: f64) -> Vec3 {
        self.p_c + self.direction() * t
    }

    /// Closed-form back-projection for a camera with world rotation `r_cw`
    /// and centre `c`: direction `R·K⁻¹·[u, v, 1]ᵀ`, unit length.
    ///
    /// Spans the same line as `P⁺·[u, v, 1]ᵀ`; used on hot paths.
    pub fn through_pixel(r_cw: &Matrix3<f64>, c: &Vec3, intr: &Intrinsics, px: PixelPoint) -> Self {
        let k_inv_x = Vec3::new((px.u - intr.u0) / intr.f_px, (px.v - intr.v0) / intr.f_px, 1.0);
        let d = r_cw * k_inv_x;
        Self { p_c: *c, p_s: c + d / d.norm() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionMatrix(pub Matrix3x4<f64>);

/// `P = K·Rᵀ·[I | −c]` for a camera with world pose `cam_pose_w`.
pub fn projection_matrix(intr: &Intrinsics, cam_pose_w: &Pose6) -> ProjectionMatrix {
    let rt = cam_pose_w.rotation().into_inner().transpose();
    let mut ext = Matrix3x4::zeros();
    ext.fixed_view_mut::<3, 3>(0, 0).copy_from(&rt);
    ext.set_column(3, &(-rt * cam_pose_w.r));
    ProjectionMatrix(intr.k() * ext)
}

/// Projects a world point; `s ≤ 0` means the point is behind the camera.
pub fn project(p: &ProjectionMatrix, p_w: &Vec3) -> Result<(PixelPoint, f64)> {
    let h = p.0 * Vector4::new(p_w.x, p_w.y, p_w.z, 1.0);
    let s = h.z;
    if s.abs() < 1e-12 || !s.is_finite() {
        return Err(Error::PointAtCameraPlane(s.abs()));
    }
    Ok((PixelPoint::new(h.x / s, h.y / s), s))
}

/// Moore–Penrose pseudo-inverse via SVD; singular values below
/// `1e-12·σ_max` count as zero. Rank < 3 is an error.
pub fn pseudo_inverse(p: &ProjectionMatrix) -> Result<Matrix4x3<f64>> {
    let svd = p.0.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::SingularModel("SVD did not converge".into())),
    };
    let sigma = svd.singular_values;
    let cutoff = 1e-12 * sigma.max();
    let mut inv = Matrix4x3::zeros();
    let mut rank = 0;
    for i in 0..3 {
        if sigma[i] > cutoff {
            rank += 1;
            inv += vt.row(i).transpose() * u.column(i).transpose() / sigma[i];
        }
    }
    if rank < 3 {
        return Err(Error::SingularModel(format!("projection matrix has rank {rank}")));
    }
    Ok(inv)
}

/// Back-projects a pixel through `P⁺`.
///
/// `P⁺·x` is a homogeneous point on the viewing ray. It is at infinity
/// whenever the ray is orthogonal to the camera position vector, so the
/// returned `p_s` is `p_c` plus the unit, front-facing ray direction instead
/// of the dehomogenised point; both span the same line.
pub fn back_project(p: &ProjectionMatrix, px: PixelPoint, cam_centre: &Vec3) -> Result<Ray3> {
    let h = pseudo_inverse(p)? * Vector3::new(px.u, px.v, 1.0);
    let mut d = Vec3::new(h.x, h.y, h.z) - cam_centre * h.w;
    let norm = d.norm();
    if !(norm > 1e-12) {
        return Err(Error::SingularModel("pixel does not define a ray".into()));
    }
    d /= norm;
    let depth = (p.0.fixed_view::<3, 3>(0, 0) * d).z;
    if depth < 0.0 {
        d = -d;
    }
    Ok(Ray3 { p_c: *cam_centre, p_s: cam_centre + d })
}
