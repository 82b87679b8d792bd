//! End-to-end workflows: calibration, outlier rejection, mapping onto a
//! fitted plane, and basin-of-attraction sweeps.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{Intrinsics, PixelPoint, Ray3};
use crate::error::{Error, Result};
use crate::geom::{Pose6, Vec3};
use crate::likelihood::{Dataset, NoiseConfig, Objective, ReprojectionRecord};
use crate::solve::{ensemble_sample, powell_minimize, sample_covariance, EnsembleConfig, PosteriorSamples, PowellConfig};
use crate::synth::perturb_pose;
use crate::triangulate::{ObservationRay, PatternPointEstimate};
use crate::uncert::{numerical_jacobian, PIXEL_STEP};

/// Default outlier threshold, pixels.
pub const DEFAULT_OUTLIER_THRESHOLD: f64 = 5.0;
/// Outlier rejection never leaves fewer observations than this.
pub const MIN_REMAINING_OBSERVATIONS: usize = 6;
pub const DEFAULT_BASIN_THRESHOLD: f64 = 0.1;

fn pose_of(x: &[f64]) -> Pose6 {
    Pose6::from_params(&[x[0], x[1], x[2], x[3], x[4], x[5]])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub pose: Pose6,
    /// `None` when sampling was skipped or the optimiser did not converge.
    pub posterior_cov: Option<Matrix6<f64>>,
    pub posterior_mean: Option<Vector6<f64>>,
    pub samples: Option<PosteriorSamples>,
    pub nll: f64,
    pub nll_start: f64,
    pub records: Vec<ReprojectionRecord>,
    pub points: Vec<PatternPointEstimate>,
    pub converged: bool,
    pub n_evals: usize,
}

impl CalibrationResult {
    /// Posterior standard deviation per parameter.
    pub fn posterior_sigma(&self) -> Option<[f64; 6]> {
        self.posterior_cov.map(|q| std::array::from_fn(|i| q[(i, i)].max(0.0).sqrt()))
    }
}

/// Maximum-likelihood pose from `x0`, then (unless `ecfg` is `None` or the
/// optimiser hit its iteration limit) posterior sampling around it.
pub fn calibrate(
    data: &Dataset,
    x0: &Pose6,
    pcfg: &PowellConfig,
    ecfg: Option<&EnsembleConfig>,
) -> Result<CalibrationResult> {
    if !x0.is_finite() {
        return Err(Error::InvalidArgument("start pose must be finite".into()));
    }
    let obj = Objective::new(data)?;
    let nll_start = obj.nll(x0);
    let opt = powell_minimize(|x| obj.nll(&pose_of(x)), &x0.params(), pcfg)?;
    let pose = pose_of(&opt.x);
    let ev = obj.evaluate(&pose)?;
    let mut result = CalibrationResult {
        pose,
        posterior_cov: None,
        posterior_mean: None,
        samples: None,
        nll: ev.nll,
        nll_start,
        records: ev.records,
        points: ev.points,
        converged: opt.converged,
        n_evals: opt.n_evals,
    };
    if let (Some(ecfg), true) = (ecfg, opt.converged) {
        let samples = ensemble_sample(|x| -obj.nll(&pose_of(x)), &opt.x, ecfg)?;
        let (mean, cov) = sample_covariance(&samples)?;
        result.posterior_mean = Some(Vector6::from_iterator(mean.iter().copied()));
        result.posterior_cov = Some(Matrix6::from_iterator(cov.matrix().iter().copied()));
        result.samples = Some(samples);
    }
    Ok(result)
}

/// Mean reprojection error per observation id, ascending by id.
pub fn mean_error_per_observation(records: &[ReprojectionRecord]) -> Vec<(u32, f64)> {
    let mut acc: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = acc.entry(r.obs_id).or_insert((0.0, 0));
        e.0 += r.e;
        e.1 += 1;
    }
    acc.into_iter().map(|(id, (s, n))| (id, s / n as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierIteration {
    pub remaining_obs_ids: Vec<u32>,
    pub mean_errors: Vec<(u32, f64)>,
    pub removed_obs_id: Option<u32>,
    pub pose: Pose6,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierTrace {
    pub iterations: Vec<OutlierIteration>,
    pub threshold: f64,
    /// Set when removal stopped at the minimum-observation floor while some
    /// mean error was still above threshold.
    pub hit_floor: bool,
}

/// Repeatedly optimises and drops the observation with the largest mean
/// reprojection error until every mean is below `threshold`.
pub fn reject_outliers(
    data: &Dataset,
    x0: &Pose6,
    threshold: f64,
    max_removals: usize,
    pcfg: &PowellConfig,
) -> Result<(Dataset, OutlierTrace)> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument("outlier threshold must be positive".into()));
    }
    let mut current = data.clone();
    let mut start = *x0;
    let mut trace = OutlierTrace { iterations: Vec::new(), threshold, hit_floor: false };
    loop {
        let res = calibrate(&current, &start, pcfg, None)?;
        start = res.pose;
        let means = mean_error_per_observation(&res.records);
        let remaining: Vec<u32> = means.iter().map(|(id, _)| *id).collect();
        let worst = means
            .iter()
            .copied()
            .fold(None, |best: Option<(u32, f64)>, m| match best {
                Some(b) if b.1 >= m.1 => Some(b),
                _ => Some(m),
            });
        let mut it = OutlierIteration { remaining_obs_ids: remaining.clone(), mean_errors: means, removed_obs_id: None, pose: res.pose };
        let Some((worst_id, worst_e)) = worst else {
            trace.iterations.push(it);
            break;
        };
        if worst_e < threshold || trace.iterations.len() >= max_removals {
            trace.iterations.push(it);
            break;
        }
        if remaining.len() <= MIN_REMAINING_OBSERVATIONS {
            trace.hit_floor = true;
            trace.iterations.push(it);
            break;
        }
        it.removed_obs_id = Some(worst_id);
        trace.iterations.push(it);
        current = current.filter_obs(|id| id != worst_id);
    }
    Ok((current, trace))
}

/// `a·x + b·y + c·z + d = 0`; `c = −1` unless the fit switched axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Plane {
    pub fn normal(&self) -> Vec3 {
        Vec3::new(self.a, self.b, self.c)
    }

    /// Signed residual `n·p + d`.
    pub fn eval(&self, p: &Vec3) -> f64 {
        self.normal().dot(p) + self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    pub plane: Plane,
    /// Index of the coordinate that was regressed (2 for the usual `z`).
    pub dependent_axis: usize,
    pub rms_residual: f64,
}

/// Least squares `coord[k] = α·coord[i] + β·coord[j] + γ`.
fn regress(points: &[Vec3], k: usize) -> Option<(Plane, f64)> {
    let (i, j) = match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let a = DMatrix::from_fn(points.len(), 3, |r, c| match c {
        0 => points[r][i],
        1 => points[r][j],
        _ => 1.0,
    });
    let rhs = DVector::from_fn(points.len(), |r, _| points[r][k]);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) || svd.singular_values.iter().any(|s| *s <= 1e-10 * smax) {
        return None;
    }
    let sol = svd.solve(&rhs, 0.0).ok()?;
    let rms = ((&a * &sol - rhs).norm_squared() / points.len() as f64).sqrt();
    let mut n = [0.0; 3];
    n[i] = sol[0];
    n[j] = sol[1];
    n[k] = -1.0;
    Some((Plane { a: n[0], b: n[1], c: n[2], d: sol[2] }, rms))
}

/// Least-squares plane with `c = −1`; near-vertical point sets are
/// regressed on whichever horizontal axis fits best instead.
pub fn fit_plane(points: &[Vec3]) -> Result<PlaneFit> {
    if points.len() < 3 {
        return Err(Error::RankDeficient);
    }
    let fits: Vec<Option<(Plane, f64)>> = (0..3).map(|k| regress(points, k)).collect();
    let best_other = [0, 1]
        .into_iter()
        .filter_map(|k| fits[k].map(|(p, r)| (k, p, r)))
        .min_by(|a, b| a.2.total_cmp(&b.2));
    let pick = match (fits[2], best_other) {
        (Some((p, r)), Some((_, _, ro))) if r <= 10.0 * ro => (2, p, r),
        (Some((p, r)), None) => (2, p, r),
        (_, Some(o)) => o,
        (None, None) => return Err(Error::RankDeficient),
    };
    Ok(PlaneFit { plane: pick.1, dependent_axis: pick.0, rms_residual: pick.2 })
}

/// Intersection of the line through `ray` with `plane`.
pub fn project_to_plane(ray: &Ray3, plane: &Plane) -> Result<Vec3> {
    let n = plane.normal();
    let nn = n.norm_squared();
    if !(nn > 0.0) {
        return Err(Error::InvalidArgument("plane normal is zero".into()));
    }
    let d = ray.direction();
    let denom = d.dot(&n);
    if denom.abs() < 1e-12 {
        return Err(Error::ParallelToPlane);
    }
    let p0 = -n * (plane.d / nn);
    Ok(ray.p_c + d * ((p0 - ray.p_c).dot(&n) / denom))
}

/// Plane intersection of one observation's ray with covariance propagated
/// from `(u, v)`, navigation pose, `(f, u0)` and the extrinsics.
pub fn project_with_uncertainty(
    obs: &ObservationRay,
    plane: &Plane,
    t_cb: &Pose6,
    q_tcb: &Matrix6<f64>,
    intr: &Intrinsics,
    noise: &NoiseConfig,
) -> Result<(Vec3, Matrix3<f64>)> {
    let mut x = vec![obs.pixel.u, obs.pixel.v];
    x.extend(obs.nav_pose.params());
    x.extend([intr.f_px, intr.u0]);
    x.extend(t_cb.params());
    let f = |x: &DVector<f64>| -> Result<DVector<f64>> {
        let nav = Pose6::from_params(&[x[2], x[3], x[4], x[5], x[6], x[7]]);
        let tc = Pose6::from_params(&[x[10], x[11], x[12], x[13], x[14], x[15]]);
        let o = ObservationRay::new(0, 0, PixelPoint::new(x[0], x[1]), nav, obs.nav_cov, &tc, &intr.with_fu0(x[8], x[9]));
        Ok(DVector::from_column_slice(project_to_plane(&o.ray, plane)?.as_slice()))
    };
    let x = DVector::from_vec(x);
    let mut steps = crate::uncert::metric_steps(x.as_slice());
    for k in [0, 1, 8, 9] {
        steps[k] = PIXEL_STEP;
    }
    let p = f(&x)?;
    let j = numerical_jacobian(f, &x, &steps)?;
    let mut q = DMatrix::zeros(16, 16);
    q[(0, 0)] = noise.sigma_u * noise.sigma_u;
    q[(1, 1)] = noise.sigma_v * noise.sigma_v;
    q.view_mut((2, 2), (6, 6)).copy_from(&obs.nav_cov);
    q[(8, 8)] = noise.sigma_f * noise.sigma_f;
    q[(9, 9)] = noise.sigma_u0 * noise.sigma_u0;
    q.view_mut((10, 10), (6, 6)).copy_from(q_tcb);
    let cov = &j * q * j.transpose();
    let cov = Matrix3::from_iterator(cov.iter().copied());
    Ok((Vec3::new(p[0], p[1], p[2]), (cov + cov.transpose()) * 0.5))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedPoint {
    pub point_id: u32,
    pub obs_id: u32,
    pub p: Vec3,
    pub cov: Matrix3<f64>,
}

/// Projects every observation onto `plane` through the camera at `t_cb`.
pub fn map_observations(data: &Dataset, t_cb: &Pose6, q_tcb: &Matrix6<f64>, plane: &Plane) -> Result<Vec<MappedPoint>> {
    data.observations
        .iter()
        .map(|o| {
            let ray = ObservationRay::new(
                o.obs_id,
                o.point_id,
                PixelPoint::on_scan_line(o.u),
                o.nav_pose,
                o.nav_cov,
                t_cb,
                &data.intrinsics,
            );
            let (p, cov) = project_with_uncertainty(&ray, plane, t_cb, q_tcb, &data.intrinsics, &data.noise)?;
            Ok(MappedPoint { point_id: o.point_id, obs_id: o.obs_id, p, cov })
        })
        .collect()
}

/// RMS distance of each pattern point's projections from their mean.
pub fn projection_spread(mapped: &[MappedPoint]) -> BTreeMap<u32, f64> {
    let mut groups: BTreeMap<u32, Vec<Vec3>> = BTreeMap::new();
    for m in mapped {
        groups.entry(m.point_id).or_default().push(m.p);
    }
    groups
        .into_iter()
        .map(|(id, ps)| {
            let mean = ps.iter().sum::<Vec3>() / ps.len() as f64;
            let ms = ps.iter().map(|p| (p - mean).norm_squared()).sum::<f64>() / ps.len() as f64;
            (id, ms.sqrt())
        })
        .collect()
}

/// Triangulates at `t_cb`, fits a plane through the estimates and projects
/// every observation onto it.
pub fn map_dataset(data: &Dataset, t_cb: &Pose6, q_tcb: &Matrix6<f64>) -> Result<(PlaneFit, Vec<MappedPoint>)> {
    let ev = Objective::new(data)?.evaluate(t_cb)?;
    let pts: Vec<Vec3> = ev.points.iter().map(|p| p.p_hat).collect();
    let fit = fit_plane(&pts)?;
    let mapped = map_observations(data, t_cb, q_tcb, &fit.plane)?;
    Ok((fit, mapped))
}

/// `√(Δᵀ Q⁻¹ Δ)` over the raw parameter difference.
pub fn mahalanobis(t: &Pose6, t_ref: &Pose6, q: &Matrix6<f64>) -> Result<f64> {
    let delta = Vector6::from_iterator(t.params().iter().zip(t_ref.params()).map(|(a, b)| a - b));
    let chol = q
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("covariance is not positive definite".into()))?;
    Ok(delta.dot(&chol.solve(&delta)).max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasinSpec {
    pub d_max: f64,
    pub phi_max: f64,
    pub n_d: usize,
    pub n_phi: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinCell {
    pub d: f64,
    pub phi: f64,
    pub start: Pose6,
    pub result: Pose6,
    pub mahalanobis: f64,
    pub converged: bool,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinGrid {
    pub spec: BasinSpec,
    /// Row-major over `(d, phi)`.
    pub cells: Vec<BasinCell>,
    pub success_threshold: f64,
}

fn axis(max: f64, n: usize, i: usize) -> f64 {
    if n == 1 {
        0.0
    } else {
        max * i as f64 / (n - 1) as f64
    }
}

/// Optimises from starts spread uniformly in `(d, phi)` around `t_ref`.
///
/// Every cell draws its perturbation from its own random stream, so the
/// grid is the same whether or not it runs on the rayon pool.
#[allow(clippy::too_many_arguments)]
pub fn basin_of_attraction(
    data: &Dataset,
    t_ref: &Pose6,
    q_ref: &Matrix6<f64>,
    spec: &BasinSpec,
    seed: u64,
    pcfg: &PowellConfig,
    success_threshold: f64,
    parallel: bool,
) -> Result<BasinGrid> {
    if spec.n_d == 0 || spec.n_phi == 0 || !(spec.d_max >= 0.0) || !(0.0..=std::f64::consts::PI).contains(&spec.phi_max) {
        return Err(Error::InvalidArgument("basin grid needs n ≥ 1, d_max ≥ 0 and phi_max in [0, π]".into()));
    }
    mahalanobis(t_ref, t_ref, q_ref)?;
    let obj = Objective::new(data)?;
    let run = |idx: usize| -> Result<BasinCell> {
        let (i, j) = (idx / spec.n_phi, idx % spec.n_phi);
        let (d, phi) = (axis(spec.d_max, spec.n_d, i), axis(spec.phi_max, spec.n_phi, j));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx as u64);
        let start = perturb_pose(t_ref, d, phi, &mut rng);
        let opt = powell_minimize(|x| obj.nll(&pose_of(x)), &start.params(), pcfg)?;
        let result = pose_of(&opt.x);
        let m = mahalanobis(&result, t_ref, q_ref)?;
        Ok(BasinCell { d, phi, start, result, mahalanobis: m, converged: opt.converged, success: m < success_threshold })
    };
    let n = spec.n_d * spec.n_phi;
    let cells: Result<Vec<BasinCell>> = if parallel {
        (0..n).into_par_iter().map(run).collect()
    } else {
        (0..n).map(run).collect()
    };
    Ok(BasinGrid { spec: *spec, cells: cells?, success_threshold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn plane_examples() {
        let pts: Vec<Vec3> = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (2.0, 3.0), (-1.0, 0.5)]
            .iter()
            .map(|&(x, y)| Vec3::new(x, y, 1.0 + 2.0 * x + 3.0 * y))
            .collect();
        let f = fit_plane(&pts).unwrap();
        assert_eq!(f.dependent_axis, 2);
        let p = f.plane;
        assert_abs_diff_eq!(Vector6::new(p.a, p.b, p.c, p.d, 0.0, 0.0), Vector6::new(2.0, 3.0, -1.0, 1.0, 0.0, 0.0), epsilon = 1e-10);

        let flat: Vec<Vec3> = pts.iter().map(|p| Vec3::new(p.x, p.y, 0.0)).collect();
        let p = fit_plane(&flat).unwrap().plane;
        assert_abs_diff_eq!(Vector6::new(p.a, p.b, p.c, p.d, 0.0, 0.0), Vector6::new(0.0, 0.0, -1.0, 0.0, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn noisy_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Vec3> = (0..200)
            .map(|_| {
                let (x, y): (f64, f64) = (rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0);
                let n: f64 = rng.sample(rand_distr::StandardNormal);
                Vec3::new(x, y, 0.5 - 0.3 * x + 0.8 * y + 1e-3 * n)
            })
            .collect();
        let p = fit_plane(&pts).unwrap().plane;
        assert!((p.a + 0.3).abs() < 1e-2 && (p.b - 0.8).abs() < 1e-2 && (p.d - 0.5).abs() < 1e-2);
    }

    #[test]
    fn vertical_plane_switches_axis() {
        let pts: Vec<Vec3> = (0..12).map(|i| Vec3::new((i % 4) as f64 * 0.1, 2.0, -((i / 4) as f64) * 0.1)).collect();
        let f = fit_plane(&pts).unwrap();
        assert_eq!(f.dependent_axis, 1);
        assert!(pts.iter().all(|p| f.plane.eval(p).abs() < 1e-12));
    }

    #[test]
    fn collinear_points_are_rank_deficient() {
        let pts: Vec<Vec3> = (0..5).map(|i| Vec3::new(i as f64, 2.0 * i as f64, 1.0)).collect();
        assert_eq!(fit_plane(&pts), Err(Error::RankDeficient));
    }

    fn ray(c: [f64; 3], d: [f64; 3]) -> Ray3 {
        let c = Vec3::from(c);
        Ray3::new(c, c + Vec3::from(d)).unwrap()
    }

    #[test]
    fn plane_projection_examples() {
        let ground = Plane { a: 0.0, b: 0.0, c: -1.0, d: 0.0 };
        assert_abs_diff_eq!(project_to_plane(&ray([0.0, 0.0, 5.0], [0.0, 0.0, -5.0]), &ground).unwrap(), Vec3::zeros(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            project_to_plane(&ray([0.0, 0.0, 5.0], [1.0, 0.0, -1.0]), &ground).unwrap(),
            Vec3::new(5.0, 0.0, 0.0),
            epsilon = 1e-12
        );
        assert_eq!(project_to_plane(&ray([0.0, 0.0, 5.0], [1.0, 0.0, 0.0]), &ground), Err(Error::ParallelToPlane));
        let tilted = Plane { a: 2.0, b: 3.0, c: -1.0, d: 1.0 };
        let on = Vec3::new(0.5, -0.2, 1.0 + 2.0 * 0.5 - 0.6);
        for dir in [[0.3, 0.1, 1.0], [-1.0, 0.2, 0.4]] {
            let r = Ray3::new(on - Vec3::from(dir) * 2.0, on - Vec3::from(dir)).unwrap();
            assert_abs_diff_eq!(project_to_plane(&r, &tilted).unwrap(), on, epsilon = 1e-12);
        }
    }

    #[test]
    fn mahalanobis_examples() {
        let t = Pose6::from_params(&[0.1, 0.2, 0.3, 0.01, 0.02, 0.03]);
        assert_eq!(mahalanobis(&t, &t, &Matrix6::identity()).unwrap(), 0.0);
        let mut p = t.params();
        p[4] += 1.0;
        assert_abs_diff_eq!(mahalanobis(&Pose6::from_params(&p), &t, &Matrix6::identity()).unwrap(), 1.0, epsilon = 1e-12);
        let mut p = t.params();
        p[0] += 2.0;
        let q = Matrix6::from_diagonal(&Vector6::new(4.0, 1.0, 1.0, 1.0, 1.0, 1.0));
        assert_abs_diff_eq!(mahalanobis(&Pose6::from_params(&p), &t, &q).unwrap(), 1.0, epsilon = 1e-12);
        assert!(mahalanobis(&t, &t, &Matrix6::zeros()).is_err());
    }

    fn sample_obs() -> (ObservationRay, Intrinsics, NoiseConfig) {
        let intr = Intrinsics::new(400.0, 323.0, 648, 2.5e-3, 0.0155).unwrap();
        let noise = NoiseConfig { sigma_u: 0.5, sigma_v: 0.5, sigma_u0: 2.0, sigma_f: 6.5 };
        let nav = Pose6::from_params(&[0.0, 0.0, -2.0, 0.05, -0.02, 0.3]);
        let cov = Matrix6::from_diagonal(&Vector6::new(1e-4, 1e-4, 1e-4, 1e-5, 1e-5, 1e-5));
        let o = ObservationRay::new(0, 0, PixelPoint::on_scan_line(290.0), nav, cov, &Pose6::identity(), &intr);
        (o, intr, noise)
    }

    #[test]
    fn projection_covariance_behaviour() {
        let (mut o, intr, noise) = sample_obs();
        let ground = Plane { a: 0.0, b: 0.0, c: -1.0, d: 0.0 };
        let t_cb = Pose6::identity();
        let (_, base) = project_with_uncertainty(&o, &ground, &t_cb, &Matrix6::zeros(), &intr, &noise).unwrap();
        let q = Matrix6::identity() * 1e-5;
        let (_, inflated) = project_with_uncertainty(&o, &ground, &t_cb, &q, &intr, &noise).unwrap();
        assert!(inflated.trace() > base.trace());

        o.nav_cov = Matrix6::zeros();
        let tiny = NoiseConfig { sigma_u: 0.0, sigma_v: 0.0, sigma_u0: 0.0, sigma_f: 0.0 };
        let (_, zero) = project_with_uncertainty(&o, &ground, &t_cb, &Matrix6::zeros(), &intr, &tiny).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
    }
}
