//! Reprojection errors, their propagated variances and the negative log
//! likelihood of a candidate camera-to-body pose.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Matrix6, Vector2, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::camera::{Intrinsics, PixelPoint};
use crate::error::{Error, Result};
use crate::geom::{Pose6, Vec3};
use crate::triangulate::{self, Extrinsics, NavSample, ObsGeometry, PatternPointEstimate, RayBundle};
use crate::uncert::{check_covariance, metric_step, PIXEL_STEP};

/// Objective value returned when any pattern point cannot be triangulated
/// or reprojected.
pub const SURROGATE_NLL: f64 = 1e18;

/// Variances at or below this are replaced by it and flagged.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Standard deviations of the image-side inputs, all in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub sigma_u: f64,
    pub sigma_v: f64,
    pub sigma_u0: f64,
    pub sigma_f: f64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_u", self.sigma_u),
            ("sigma_v", self.sigma_v),
            ("sigma_u0", self.sigma_u0),
            ("sigma_f", self.sigma_f),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Every standard deviation multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            sigma_u: self.sigma_u * k,
            sigma_v: self.sigma_v * k,
            sigma_u0: self.sigma_u0 * k,
            sigma_f: self.sigma_f * k,
        }
    }
}

/// A single scan-line pixel of a pattern point and the platform state at
/// the time it was recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub obs_id: u32,
    pub point_id: u32,
    pub u: f64,
    pub nav_pose: Pose6,
    pub nav_cov: Matrix6<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub observations: Vec<Observation>,
    pub intrinsics: Intrinsics,
    pub noise: NoiseConfig,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        self.noise.validate()?;
        for o in &self.observations {
            if !o.u.is_finite() || !o.nav_pose.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "observation {} of point {} has non-finite values",
                    o.obs_id, o.point_id
                )));
            }
            check_covariance(&nalgebra::DMatrix::from_column_slice(6, 6, o.nav_cov.as_slice()))?;
        }
        for (point_id, idx) in self.groups() {
            if idx.len() < 2 {
                return Err(Error::InsufficientObservations { point_id, found: idx.len() });
            }
        }
        Ok(())
    }

    /// Observation indices per pattern point, ordered by point id.
    pub fn groups(&self) -> BTreeMap<u32, Vec<usize>> {
        let mut g: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, o) in self.observations.iter().enumerate() {
            g.entry(o.point_id).or_default().push(i);
        }
        g
    }

    pub fn point_ids(&self) -> Vec<u32> {
        self.groups().into_keys().collect()
    }

    /// Distinct observation ids in first-seen order.
    pub fn obs_ids(&self) -> Vec<u32> {
        let mut seen = Vec::new();
        for o in &self.observations {
            if !seen.contains(&o.obs_id) {
                seen.push(o.obs_id);
            }
        }
        seen
    }

    /// Copy keeping only the observations whose `obs_id` passes `keep`.
    pub fn filter_obs(&self, keep: impl Fn(u32) -> bool) -> Self {
        Self {
            observations: self.observations.iter().filter(|o| keep(o.obs_id)).cloned().collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReprojectionRecord {
    pub point_id: u32,
    pub obs_id: u32,
    /// Reprojection error, pixels.
    pub e: f64,
    /// Propagated variance of `e`, pixels².
    pub var_e: f64,
    pub u_hat: f64,
    pub v_hat: f64,
    /// Set when `var_e` was raised to [`VARIANCE_FLOOR`].
    pub floored: bool,
}

/// Euclidean pixel distance.
pub fn reprojection_error(observed: PixelPoint, reprojected: PixelPoint) -> f64 {
    (observed.u - reprojected.u).hypot(observed.v - reprojected.v)
}

/// `Σ e²/(2σ²)` over a set of records.
pub fn nll_from_records(records: &[ReprojectionRecord]) -> f64 {
    records.iter().map(|r| r.e * r.e / (2.0 * r.var_e)).sum()
}

/// Inputs of a single reprojection-error variance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReprojectionInputs {
    pub p_hat: Vec3,
    pub sigma_p: Matrix3<f64>,
    pub observed: PixelPoint,
    pub nav_pose: Pose6,
    pub nav_cov: Matrix6<f64>,
    pub t_cb: Pose6,
    /// Zero while estimating; the extrinsics are the unknown.
    pub t_cb_cov: Matrix6<f64>,
    pub intrinsics: Intrinsics,
    pub noise: NoiseConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub var_e: f64,
    pub e: f64,
    pub floored: bool,
}

/// Propagates the input covariances of one record onto its reprojection
/// error, `σ² = jᵀQj`, with `j` from central differences over
/// `(p̂, (u, v), nav, (f, u0), t_cb)`.
pub fn reprojection_variance(inp: &ReprojectionInputs) -> Result<VarianceEstimate> {
    let geo = ObsGeometry::new(0, inp.observed, &inp.nav_pose, inp.nav_cov);
    let ext = Extrinsics::new(&inp.t_cb);
    let mut var = record_variance(&geo, &ext, &inp.intrinsics, &inp.noise, &inp.p_hat, &inp.sigma_p)
        .ok_or(Error::PointAtCameraPlane(0.0))?;
    if inp.t_cb_cov.iter().any(|v| *v != 0.0) {
        let p = inp.t_cb.params();
        let nominal = residual_at(&geo.nav[0], &ext, &inp.intrinsics, inp.observed, &inp.p_hat)
            .ok_or(Error::PointAtCameraPlane(0.0))?;
        let dir = residual_direction(&nominal);
        let mut j = Vector6::zeros();
        for k in 0..6 {
            let h = metric_step(p[k]);
            let e_at = |s: f64| {
                let mut q = p;
                q[k] += s * h;
                let ext = Extrinsics::new(&Pose6::from_params(&q));
                residual_at(&geo.nav[0], &ext, &inp.intrinsics, inp.observed, &inp.p_hat)
            };
            let (a, b) = (e_at(1.0).ok_or(Error::PointAtCameraPlane(0.0))?, e_at(-1.0).ok_or(Error::PointAtCameraPlane(0.0))?);
            j[k] = dir.dot(&(a - b)) / (2.0 * h);
        }
        var.var_e += (j.transpose() * inp.t_cb_cov * j)[0];
        var.floored = false;
        if !(var.var_e > VARIANCE_FLOOR) {
            var.var_e = VARIANCE_FLOOR;
            var.floored = true;
        }
    }
    Ok(var)
}

/// Reprojects `p` through the camera mounted by `ext` on body pose `nav`.
pub(crate) fn reproject(nav: &NavSample, ext: &Extrinsics, intr: &Intrinsics, p: &Vec3) -> Option<PixelPoint> {
    let xb = nav.rot.tr_mul(&(p - nav.r));
    let xc = ext.rot.tr_mul(&(xb - ext.r));
    if !(xc.z.abs() >= 1e-12) {
        return None;
    }
    Some(PixelPoint::new(intr.f_px * xc.x / xc.z + intr.u0, intr.f_px * xc.y / xc.z + intr.v0))
}

fn residual_at(nav: &NavSample, ext: &Extrinsics, intr: &Intrinsics, obs: PixelPoint, p: &Vec3) -> Option<Vector2<f64>> {
    reproject(nav, ext, intr, p).map(|r| Vector2::new(r.u - obs.u, r.v - obs.v))
}

/// Unit vector along the residual; `e = |r|` has gradient `r̂ᵀ ∂r`.
/// At `r = 0` the scan-line direction is used.
fn residual_direction(r: &Vector2<f64>) -> Vector2<f64> {
    let n = r.norm();
    if n > 0.0 { r / n } else { Vector2::x() }
}

fn record_variance(
    geo: &ObsGeometry,
    ext: &Extrinsics,
    intr: &Intrinsics,
    noise: &NoiseConfig,
    p: &Vec3,
    sigma_p: &Matrix3<f64>,
) -> Option<VarianceEstimate> {
    let nav0 = &geo.nav[0];
    let obs = geo.pixel;
    let r0 = residual_at(nav0, ext, intr, obs, p)?;
    let e = r0.norm();
    let dir = residual_direction(&r0);
    let diff = |a: Vector2<f64>, b: Vector2<f64>, h: f64| dir.dot(&(a - b)) / (2.0 * h);
    let mut var = 0.0;

    let mut jp = Vector3::zeros();
    for k in 0..3 {
        let h = metric_step(p[k]);
        let mut dp = Vec3::zeros();
        dp[k] = h;
        jp[k] = diff(residual_at(nav0, ext, intr, obs, &(p + dp))?, residual_at(nav0, ext, intr, obs, &(p - dp))?, h);
    }
    var += (jp.transpose() * sigma_p * jp)[0];

    // the residual moves one-for-one against the observed pixel
    var += dir.x * dir.x * noise.sigma_u * noise.sigma_u + dir.y * dir.y * noise.sigma_v * noise.sigma_v;

    if geo.nav_cov.iter().any(|v| *v != 0.0) {
        let mut jn = Vector6::zeros();
        for k in 0..6 {
            jn[k] = diff(
                residual_at(&geo.nav[1 + 2 * k], ext, intr, obs, p)?,
                residual_at(&geo.nav[2 + 2 * k], ext, intr, obs, p)?,
                geo.nav_steps[k],
            );
        }
        var += (jn.transpose() * geo.nav_cov * jn)[0];
    }

    let h = PIXEL_STEP;
    let (f, u0) = (intr.f_px, intr.u0);
    let df = diff(
        residual_at(nav0, ext, &intr.with_fu0(f + h, u0), obs, p)?,
        residual_at(nav0, ext, &intr.with_fu0(f - h, u0), obs, p)?,
        h,
    );
    let du0 = diff(
        residual_at(nav0, ext, &intr.with_fu0(f, u0 + h), obs, p)?,
        residual_at(nav0, ext, &intr.with_fu0(f, u0 - h), obs, p)?,
        h,
    );
    var += df * df * noise.sigma_f * noise.sigma_f + du0 * du0 * noise.sigma_u0 * noise.sigma_u0;

    if !var.is_finite() || !e.is_finite() {
        return None;
    }
    let floored = !(var > VARIANCE_FLOOR);
    Some(VarianceEstimate { var_e: if floored { VARIANCE_FLOOR } else { var }, e, floored })
}

/// Full evaluation of the objective at one pose.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub nll: f64,
    /// One per observation, grouped by point id.
    pub records: Vec<ReprojectionRecord>,
    pub points: Vec<PatternPointEstimate>,
}

/// The negative log likelihood over a fixed dataset, with everything that
/// does not depend on the extrinsics precomputed.
#[derive(Debug, Clone)]
pub struct Objective {
    intrinsics: Intrinsics,
    noise: NoiseConfig,
    groups: Vec<(u32, Vec<ObsGeometry>)>,
}

impl Objective {
    pub fn new(data: &Dataset) -> Result<Self> {
        data.validate()?;
        let groups = data
            .groups()
            .into_iter()
            .map(|(pid, idx)| {
                let geos = idx
                    .iter()
                    .map(|&i| {
                        let o = &data.observations[i];
                        ObsGeometry::new(o.obs_id, PixelPoint::on_scan_line(o.u), &o.nav_pose, o.nav_cov)
                    })
                    .collect();
                (pid, geos)
            })
            .collect();
        Ok(Self { intrinsics: data.intrinsics, noise: data.noise, groups })
    }

    pub fn n_records(&self) -> usize {
        self.groups.iter().map(|(_, g)| g.len()).sum()
    }

    /// Triangulates every point at `t_cb` and reprojects every observation.
    pub fn evaluate(&self, t_cb: &Pose6) -> Result<Evaluation> {
        if !t_cb.is_finite() {
            return Err(Error::InvalidArgument("non-finite pose".into()));
        }
        let ext = Extrinsics::new(t_cb);
        let intr = &self.intrinsics;
        let mut records = Vec::with_capacity(self.n_records());
        let mut points = Vec::with_capacity(self.groups.len());
        for (pid, geos) in &self.groups {
            let bundles: Vec<RayBundle> = geos.iter().map(|g| g.bundle(&ext, intr)).collect();
            let refs: Vec<_> = geos.iter().zip(&bundles).collect();
            let est = triangulate::fuse(*pid, &refs, &self.noise)?;
            for g in geos {
                let var = record_variance(g, &ext, intr, &self.noise, &est.p_hat, &est.sigma)
                    .ok_or(Error::PointAtCameraPlane(0.0))?;
                let r = reproject(&g.nav[0], &ext, intr, &est.p_hat).ok_or(Error::PointAtCameraPlane(0.0))?;
                records.push(ReprojectionRecord {
                    point_id: *pid,
                    obs_id: g.obs_id,
                    e: var.e,
                    var_e: var.var_e,
                    u_hat: r.u,
                    v_hat: r.v,
                    floored: var.floored,
                });
            }
            points.push(est);
        }
        let nll = nll_from_records(&records);
        if !nll.is_finite() {
            return Err(Error::DegenerateGeometry("non-finite objective".into()));
        }
        Ok(Evaluation { nll, records, points })
    }

    /// Objective value; [`SURROGATE_NLL`] wherever [`Objective::evaluate`] fails.
    pub fn nll(&self, t_cb: &Pose6) -> f64 {
        self.evaluate(t_cb).map(|e| e.nll).unwrap_or(SURROGATE_NLL)
    }
}

/// One-shot objective evaluation; prefer [`Objective`] inside loops.
pub fn negative_log_likelihood(t_cb: &Pose6, data: &Dataset) -> f64 {
    Objective::new(data).map(|o| o.nll(t_cb)).unwrap_or(SURROGATE_NLL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::AxisAngle;
    use approx::assert_abs_diff_eq;

    fn intr() -> Intrinsics {
        Intrinsics::new(400.0, 323.0, 648, 2.5e-3, 0.0155).unwrap()
    }

    fn noise() -> NoiseConfig {
        NoiseConfig { sigma_u: 0.5, sigma_v: 0.5, sigma_u0: 2.0, sigma_f: 6.5 }
    }

    #[test]
    fn error_examples() {
        let e = |a: (f64, f64), b: (f64, f64)| reprojection_error(PixelPoint::new(a.0, a.1), PixelPoint::new(b.0, b.1));
        assert_eq!(e((5.0, 0.0), (5.0, 0.0)), 0.0);
        assert_abs_diff_eq!(e((100.0, 0.0), (103.0, 4.0)), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e((0.0, 0.0), (0.0, 2.0)), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn one_term_sum() {
        let r = ReprojectionRecord { point_id: 0, obs_id: 0, e: 1.0, var_e: 1.0, u_hat: 0.0, v_hat: 0.0, floored: false };
        assert_eq!(nll_from_records(&[r]), 0.5);
    }

    /// Camera looking straight down the world z axis from the origin.
    fn simple_inputs(u: f64) -> ReprojectionInputs {
        ReprojectionInputs {
            p_hat: Vec3::new(0.0, 0.0, 2.0),
            sigma_p: Matrix3::zeros(),
            observed: PixelPoint::on_scan_line(u),
            nav_pose: Pose6::identity(),
            nav_cov: Matrix6::zeros(),
            t_cb: Pose6::identity(),
            t_cb_cov: Matrix6::zeros(),
            intrinsics: intr(),
            noise: NoiseConfig { sigma_u: 0.5, sigma_v: 1e-9, sigma_u0: 1e-9, sigma_f: 1e-9 },
        }
    }

    #[test]
    fn single_term_variance() {
        // reprojects to u0 exactly; observed 3 px away along the scan line
        let v = reprojection_variance(&simple_inputs(326.0)).unwrap();
        assert_abs_diff_eq!(v.e, 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v.var_e, 0.25, epsilon = 1e-9);
        assert!(!v.floored);
    }

    #[test]
    fn variance_is_bilinear() {
        let mut a = simple_inputs(330.0);
        a.sigma_p = Matrix3::from_diagonal(&Vec3::new(1e-4, 2e-4, 5e-5));
        a.nav_pose = Pose6::new(Vec3::new(0.01, -0.02, 0.0), AxisAngle::new(0.01, 0.02, -0.01));
        a.nav_cov = Matrix6::from_diagonal(&Vector6::new(1e-4, 1e-4, 2e-4, 1e-5, 1e-5, 2e-5));
        a.noise = noise();
        let base = reprojection_variance(&a).unwrap().var_e;
        let mut b = a.clone();
        b.sigma_p *= 2.0;
        b.nav_cov *= 2.0;
        b.noise = noise().scaled(2f64.sqrt());
        let doubled = reprojection_variance(&b).unwrap().var_e;
        assert_abs_diff_eq!(doubled / base, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_variance_is_floored() {
        let mut a = simple_inputs(326.0);
        a.noise.sigma_u = 1e-12;
        let v = reprojection_variance(&a).unwrap();
        assert!(v.floored);
        assert_eq!(v.var_e, VARIANCE_FLOOR);
    }

    #[test]
    fn extrinsics_block_adds_variance() {
        let a = simple_inputs(330.0);
        let mut b = a.clone();
        b.t_cb_cov = Matrix6::identity() * 1e-6;
        assert!(reprojection_variance(&b).unwrap().var_e > reprojection_variance(&a).unwrap().var_e);
    }

    #[test]
    fn lonely_point_is_rejected() {
        let o = Observation { obs_id: 0, point_id: 3, u: 300.0, nav_pose: Pose6::identity(), nav_cov: Matrix6::zeros() };
        let d = Dataset { observations: vec![o], intrinsics: intr(), noise: noise() };
        assert_eq!(d.validate(), Err(Error::InsufficientObservations { point_id: 3, found: 1 }));
        assert_eq!(negative_log_likelihood(&Pose6::identity(), &d), SURROGATE_NLL);
    }
}
