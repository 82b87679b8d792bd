//! Pairwise ray triangulation of pattern points and covariance-weighted fusion.
//!
//! Every ordered pair of observations of a point gives the point on ray `i`
//! nearest to ray `j`. Its covariance comes from central differences over the
//! stacked inputs `(u,v)_i, nav_i, (u,v)_j, nav_j, (f, u0), t_cb`; the `t_cb`
//! block carries zero covariance during estimation, so its columns are never
//! evaluated. The pair estimates are then fused with inverse-covariance
//! weights.

use nalgebra::{Matrix3, Matrix3x6, Matrix6};

use crate::camera::{Intrinsics, PixelPoint, Ray3};
use crate::error::{Error, Result};
use crate::geom::{axis_angle_to_rotation, Pose6, Vec3};
use crate::likelihood::NoiseConfig;
use crate::uncert::{metric_step, WeightedFusion, PIXEL_STEP};

/// Pairs closer to parallel than this are skipped.
pub const MIN_RAY_ANGLE_DEG: f64 = 0.5;

/// One pixel observation together with the platform state it was taken from.
///
/// `ray` is the nominal viewing ray for the extrinsics the value was built
/// with. [`estimate_pattern_point`] rebuilds rays from `pixel`, `nav_pose`
/// and its own `t_cb`, so the stored ray is informational.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRay {
    pub ray: Ray3,
    pub obs_id: u32,
    pub point_id: u32,
    pub pixel: PixelPoint,
    pub nav_pose: Pose6,
    pub nav_cov: Matrix6<f64>,
}

impl ObservationRay {
    pub fn new(
        obs_id: u32,
        point_id: u32,
        pixel: PixelPoint,
        nav_pose: Pose6,
        nav_cov: Matrix6<f64>,
        t_cb: &Pose6,
        intr: &Intrinsics,
    ) -> Self {
        let geo = ObsGeometry::new(obs_id, pixel, &nav_pose, nav_cov);
        let ext = Extrinsics::new(t_cb);
        let line = geo.line(0, &ext, intr, pixel);
        let ray = Ray3 { p_c: line.c, p_s: line.c + line.d };
        Self { ray, obs_id, point_id, pixel, nav_pose, nav_cov }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternPointEstimate {
    pub p_hat: Vec3,
    pub sigma: Matrix3<f64>,
    pub point_id: u32,
    pub n_pairs_used: usize,
}

/// Point on `ri` nearest to `rj`, the foot of their common perpendicular.
pub fn ray_pair_closest_point(ri: &Ray3, rj: &Ray3) -> Result<Vec3> {
    closest(&Line::from_ray(ri), &Line::from_ray(rj)).ok_or(Error::ParallelRays)
}

/// Triangulates one pattern point from all of its observations.
pub fn estimate_pattern_point(
    obs: &[ObservationRay],
    t_cb: &Pose6,
    intr: &Intrinsics,
    noise: &NoiseConfig,
) -> Result<PatternPointEstimate> {
    let point_id = check_group(obs)?;
    let geos: Vec<ObsGeometry> = obs
        .iter()
        .map(|o| ObsGeometry::new(o.obs_id, o.pixel, &o.nav_pose, o.nav_cov))
        .collect();
    let ext = Extrinsics::new(t_cb);
    let bundles: Vec<RayBundle> = geos.iter().map(|g| g.bundle(&ext, intr)).collect();
    let refs: Vec<(&ObsGeometry, &RayBundle)> = geos.iter().zip(&bundles).collect();
    fuse(point_id, &refs, noise)
}

/// Closest point and propagated covariance for the ordered pair `(oi, oj)`.
pub fn pair_estimate(
    oi: &ObservationRay,
    oj: &ObservationRay,
    t_cb: &Pose6,
    intr: &Intrinsics,
    noise: &NoiseConfig,
) -> Result<(Vec3, Matrix3<f64>)> {
    let ext = Extrinsics::new(t_cb);
    let gi = ObsGeometry::new(oi.obs_id, oi.pixel, &oi.nav_pose, oi.nav_cov);
    let gj = ObsGeometry::new(oj.obs_id, oj.pixel, &oj.nav_pose, oj.nav_cov);
    let (bi, bj) = (gi.bundle(&ext, intr), gj.bundle(&ext, intr));
    pair_point(&gi, &bi, &gj, &bj, noise).ok_or(Error::ParallelRays)
}

fn check_group(obs: &[ObservationRay]) -> Result<u32> {
    let point_id = obs.first().map(|o| o.point_id).unwrap_or(0);
    if obs.len() < 2 {
        return Err(Error::InsufficientObservations { point_id, found: obs.len() });
    }
    if let Some(o) = obs.iter().find(|o| o.point_id != point_id) {
        return Err(Error::InvalidArgument(format!(
            "observations mix pattern points {point_id} and {}",
            o.point_id
        )));
    }
    Ok(point_id)
}

/// Line through `c` with (not necessarily unit) direction `d`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Line {
    pub c: Vec3,
    pub d: Vec3,
}

impl Line {
    fn from_ray(r: &Ray3) -> Self {
        Self { c: r.p_c, d: r.direction() }
    }
}

fn closest(li: &Line, lj: &Line) -> Option<Vec3> {
    let n = lj.d.cross(&li.d.cross(&lj.d));
    let denom = li.d.dot(&n);
    if denom == 0.0 || denom.abs() < 1e-12 * li.d.norm() * n.norm() {
        return None;
    }
    Some(li.c + li.d * ((lj.c - li.c).dot(&n) / denom))
}

/// Acute angle between two lines, radians.
fn line_angle(li: &Line, lj: &Line) -> f64 {
    let s = li.d.cross(&lj.d).norm();
    let c = li.d.dot(&lj.d).abs();
    s.atan2(c)
}

/// Camera-to-body rotation and lever arm.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Extrinsics {
    pub rot: Matrix3<f64>,
    pub r: Vec3,
}

impl Extrinsics {
    pub fn new(t_cb: &Pose6) -> Self {
        Self { rot: t_cb.rotation().into_inner(), r: t_cb.r }
    }
}

/// Body pose in the world frame.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NavSample {
    pub rot: Matrix3<f64>,
    pub r: Vec3,
}

impl NavSample {
    pub fn from_params(p: &[f64; 6]) -> Self {
        let pose = Pose6::from_params(p);
        Self { rot: axis_angle_to_rotation(&pose.rot).into_inner(), r: pose.r }
    }
}

/// Per-observation quantities that do not depend on the extrinsics:
/// the nominal body pose and the body pose with each of its six
/// parameters stepped by `±h`.
#[derive(Debug, Clone)]
pub(crate) struct ObsGeometry {
    pub obs_id: u32,
    pub pixel: PixelPoint,
    pub nav_cov: Matrix6<f64>,
    /// Index 0 is nominal, `1 + 2k` is `+h_k`, `2 + 2k` is `−h_k`.
    pub nav: [NavSample; 13],
    pub nav_steps: [f64; 6],
}

impl ObsGeometry {
    pub fn new(obs_id: u32, pixel: PixelPoint, nav_pose: &Pose6, nav_cov: Matrix6<f64>) -> Self {
        let p = nav_pose.params();
        let nominal = NavSample::from_params(&p);
        let mut nav = [nominal; 13];
        let mut nav_steps = [0.0; 6];
        for k in 0..6 {
            let h = metric_step(p[k]);
            nav_steps[k] = h;
            for (slot, sign) in [(1 + 2 * k, 1.0), (2 + 2 * k, -1.0)] {
                if k < 3 {
                    nav[slot].r[k] += sign * h;
                } else {
                    let mut q = p;
                    q[k] += sign * h;
                    nav[slot] = NavSample::from_params(&q);
                }
            }
        }
        Self { obs_id, pixel, nav_cov, nav, nav_steps }
    }

    pub fn line(&self, nav_idx: usize, ext: &Extrinsics, intr: &Intrinsics, px: PixelPoint) -> Line {
        let nav = &self.nav[nav_idx];
        let r_cw = nav.rot * ext.rot;
        let c = nav.rot * ext.r + nav.r;
        let k_inv_x = Vec3::new((px.u - intr.u0) / intr.f_px, (px.v - intr.v0) / intr.f_px, 1.0);
        let d = r_cw * k_inv_x;
        Line { c, d: d / d.norm() }
    }

    pub fn bundle(&self, ext: &Extrinsics, intr: &Intrinsics) -> RayBundle {
        let px = self.pixel;
        let nom = self.line(0, ext, intr, px);
        let h = PIXEL_STEP;
        let uv = [
            [
                self.line(0, ext, intr, PixelPoint::new(px.u + h, px.v)),
                self.line(0, ext, intr, PixelPoint::new(px.u - h, px.v)),
            ],
            [
                self.line(0, ext, intr, PixelPoint::new(px.u, px.v + h)),
                self.line(0, ext, intr, PixelPoint::new(px.u, px.v - h)),
            ],
        ];
        let nav = std::array::from_fn(|k| {
            [self.line(1 + 2 * k, ext, intr, px), self.line(2 + 2 * k, ext, intr, px)]
        });
        let f = intr.f_px;
        let u0 = intr.u0;
        let int = [
            [
                self.line(0, ext, &intr.with_fu0(f + h, u0), px),
                self.line(0, ext, &intr.with_fu0(f - h, u0), px),
            ],
            [
                self.line(0, ext, &intr.with_fu0(f, u0 + h), px),
                self.line(0, ext, &intr.with_fu0(f, u0 - h), px),
            ],
        ];
        RayBundle { nom, uv, nav, int }
    }
}

/// Nominal ray of one observation plus the rays for every `±h` input step.
#[derive(Debug, Clone)]
pub(crate) struct RayBundle {
    pub nom: Line,
    pub uv: [[Line; 2]; 2],
    pub nav: [[Line; 2]; 6],
    pub int: [[Line; 2]; 2],
}

fn central(plus: &Line, minus: &Line, other_p: &Line, other_m: &Line, h: f64, on_first: bool) -> Option<Vec3> {
    let (a, b) = if on_first {
        (closest(plus, other_p)?, closest(minus, other_m)?)
    } else {
        (closest(other_p, plus)?, closest(other_m, minus)?)
    };
    Some((a - b) / (2.0 * h))
}

fn add_own_blocks(
    sigma: &mut Matrix3<f64>,
    geo: &ObsGeometry,
    own: &RayBundle,
    other: &Line,
    noise: &NoiseConfig,
    first: bool,
) -> Option<()> {
    let h = PIXEL_STEP;
    let var_uv = [noise.sigma_u * noise.sigma_u, noise.sigma_v * noise.sigma_v];
    for (k, var) in var_uv.iter().enumerate() {
        let [p, m] = &own.uv[k];
        let col = central(p, m, other, other, h, first)?;
        *sigma += col * col.transpose() * *var;
    }
    if geo.nav_cov.iter().any(|v| *v != 0.0) {
        let mut j = Matrix3x6::zeros();
        for k in 0..6 {
            let [p, m] = &own.nav[k];
            j.set_column(k, &central(p, m, other, other, geo.nav_steps[k], first)?);
        }
        *sigma += j * geo.nav_cov * j.transpose();
    }
    Some(())
}

/// Closest point on ray `i` and its propagated covariance.
fn pair_point(
    gi: &ObsGeometry,
    bi: &RayBundle,
    gj: &ObsGeometry,
    bj: &RayBundle,
    noise: &NoiseConfig,
) -> Option<(Vec3, Matrix3<f64>)> {
    let p = closest(&bi.nom, &bj.nom)?;
    let mut sigma = Matrix3::zeros();
    add_own_blocks(&mut sigma, gi, bi, &bj.nom, noise, true)?;
    add_own_blocks(&mut sigma, gj, bj, &bi.nom, noise, false)?;
    let var_int = [noise.sigma_f * noise.sigma_f, noise.sigma_u0 * noise.sigma_u0];
    for (k, var) in var_int.iter().enumerate() {
        let [ip, im] = &bi.int[k];
        let [jp, jm] = &bj.int[k];
        let col = central(ip, im, jp, jm, PIXEL_STEP, true)?;
        sigma += col * col.transpose() * *var;
    }
    let sigma = (sigma + sigma.transpose()) * 0.5;
    if !p.iter().chain(sigma.iter()).all(|v| v.is_finite()) {
        return None;
    }
    Some((p, sigma))
}

/// Fuses every usable ordered pair, in `(i, j)` order.
pub(crate) fn fuse(
    point_id: u32,
    obs: &[(&ObsGeometry, &RayBundle)],
    noise: &NoiseConfig,
) -> Result<PatternPointEstimate> {
    if obs.len() < 2 {
        return Err(Error::InsufficientObservations { point_id, found: obs.len() });
    }
    let min_angle = MIN_RAY_ANGLE_DEG.to_radians();
    let mut fusion = WeightedFusion::default();
    for (i, (gi, bi)) in obs.iter().enumerate() {
        for (j, (gj, bj)) in obs.iter().enumerate() {
            if i == j || line_angle(&bi.nom, &bj.nom) < min_angle {
                continue;
            }
            if let Some((p, sigma)) = pair_point(gi, bi, gj, bj, noise) {
                fusion.add(&p, &sigma);
            }
        }
    }
    if fusion.used() == 0 {
        return Err(Error::DegenerateGeometry(format!(
            "no usable ray pair for pattern point {point_id}"
        )));
    }
    let (p_hat, sigma) = fusion.finish().map_err(|_| {
        Error::DegenerateGeometry(format!("singular fused covariance for pattern point {point_id}"))
    })?;
    Ok(PatternPointEstimate { p_hat, sigma, point_id, n_pairs_used: fusion.used() })
}
