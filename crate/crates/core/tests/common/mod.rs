//! Independent oracles shared by the integration tests and the acceptance
//! harness. Rotations here go through nalgebra's own `Rotation3`, never the
//! crate's conversion code.

#![allow(dead_code)]

use linecal::camera::{Intrinsics, PixelPoint};
use linecal::geom::{
    axis_angle_to_quaternion, axis_angle_to_rotation, compose, euler_cov_to_axis_angle_cov, euler_to_rotation,
    pose_distance, rotation_to_axis_angle, rotation_to_euler, transform_point, AxisAngle, EulerZYX, Pose6, Vec3,
};
use linecal::likelihood::{reprojection_variance, NoiseConfig, ReprojectionInputs};
use linecal::pipeline::{project_with_uncertainty, Plane};
use linecal::triangulate::{pair_estimate, ObservationRay};
use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rot(v: &Vec3) -> Matrix3<f64> {
    Rotation3::from_scaled_axis(*v).into_inner()
}

pub fn rot_params(p: &[f64]) -> Matrix3<f64> {
    rot(&Vec3::new(p[3], p[4], p[5]))
}

pub fn max_abs_diff(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    (a - b).abs().max()
}

pub fn unit_vector(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

/// Largest deviation seen for each geom property over `n` seeded samples.
#[derive(Debug, Default, Clone)]
pub struct GeomReport {
    pub euler_round_trip: f64,
    pub euler_vs_nalgebra: f64,
    pub axis_angle_round_trip: f64,
    pub axis_angle_vs_nalgebra: f64,
    pub quaternion_norm: f64,
    pub compose_consistency: f64,
    pub compose_associativity: f64,
    pub distance_symmetry: f64,
    pub distance_vs_nalgebra: f64,
}

impl GeomReport {
    pub fn worst(&self) -> f64 {
        [
            self.euler_round_trip,
            self.euler_vs_nalgebra,
            self.axis_angle_round_trip,
            self.axis_angle_vs_nalgebra,
            self.quaternion_norm,
            self.compose_consistency,
            self.compose_associativity,
            self.distance_symmetry,
            self.distance_vs_nalgebra,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn random_pose(rng: &mut impl Rng) -> Pose6 {
    let theta = rng.random_range(0.0..std::f64::consts::PI - 1e-3);
    let r = Vec3::from_fn(|_, _| rng.random_range(-5.0..5.0));
    Pose6::new(r, AxisAngle(unit_vector(rng) * theta))
}

pub fn geom_checks(n: usize, seed: u64) -> GeomReport {
    let mut rng = rng(seed);
    let mut rep = GeomReport::default();
    let pi = std::f64::consts::PI;
    let up = |slot: &mut f64, v: f64| *slot = slot.max(if v.is_nan() { f64::INFINITY } else { v });
    for _ in 0..n {
        let e = EulerZYX::new(
            rng.random_range(-pi + 1e-3..pi - 1e-3),
            rng.random_range(-pi / 2.0 + 0.05..pi / 2.0 - 0.05),
            rng.random_range(-pi + 1e-3..pi - 1e-3),
        );
        let r = euler_to_rotation(e).unwrap();
        up(&mut rep.euler_round_trip, (rotation_to_euler(&r).as_vector() - e.as_vector()).abs().max());
        let reference = Rotation3::from_euler_angles(e.phi_x, e.phi_y, e.phi_z).into_inner();
        up(&mut rep.euler_vs_nalgebra, max_abs_diff(r.matrix(), &reference));

        let a = random_pose(&mut rng);
        let m = axis_angle_to_rotation(&a.rot);
        up(&mut rep.axis_angle_round_trip, (rotation_to_axis_angle(&m).0 - a.rot.0).abs().max());
        up(&mut rep.axis_angle_vs_nalgebra, max_abs_diff(m.matrix(), &rot(&a.rot.0)));

        let big = AxisAngle(unit_vector(&mut rng) * rng.random_range(0.0..50.0));
        up(&mut rep.quaternion_norm, (axis_angle_to_quaternion(&big).norm() - 1.0).abs());

        let (b, c) = (random_pose(&mut rng), random_pose(&mut rng));
        let p = Vec3::from_fn(|_, _| rng.random_range(-3.0..3.0));
        let chained = transform_point(&a, &transform_point(&b, &p));
        up(&mut rep.compose_consistency, (transform_point(&compose(&a, &b), &p) - chained).abs().max());
        let left = transform_point(&compose(&compose(&a, &b), &c), &p);
        let right = transform_point(&compose(&a, &compose(&b, &c)), &p);
        up(&mut rep.compose_associativity, (left - right).abs().max());

        let (dab, dba) = (pose_distance(&a, &b), pose_distance(&b, &a));
        up(&mut rep.distance_symmetry, (dab.d - dba.d).abs().max((dab.phi - dba.phi).abs()));
        up(&mut rep.distance_symmetry, pose_distance(&a, &a).phi);
        let ra = Rotation3::from_scaled_axis(a.rot.0);
        let rb = Rotation3::from_scaled_axis(b.rot.0);
        up(&mut rep.distance_vs_nalgebra, (dab.phi - ra.angle_to(&rb)).abs());
    }
    rep
}

/// Published hand-measured attitudes: (ground vehicle Euler→axis-angle error,
/// upright platform Euler→axis-angle error, ground vehicle σ error), radians.
pub fn hand_measured_conversions() -> (f64, f64, f64) {
    let lady = Pose6::from_euler(Vec3::zeros(), EulerZYX::from_degrees(-56.0, 0.0, -90.0)).unwrap();
    let lady_err = (lady.rot.0 - Vec3::new(-0.762, 0.762, -1.433)).abs().max();
    let shrimp = Pose6::from_euler(Vec3::zeros(), EulerZYX::from_degrees(0.0, 105.0, -90.0)).unwrap();
    let shrimp_err = (shrimp.rot.0 - Vec3::new(1.399, 1.399, -1.074)).abs().max();
    let s = 2f64.to_radians();
    let q = euler_cov_to_axis_angle_cov(EulerZYX::from_degrees(-56.0, 0.0, -90.0), &(Matrix3::identity() * s * s)).unwrap();
    let sigma = q.diagonal().map(f64::sqrt);
    let sigma_err = (sigma - Vec3::new(0.039, 0.039, 0.037)).abs().max();
    (lady_err, shrimp_err, sigma_err)
}

/// Viewing ray of pixel `(u, v)` for a body at `nav` carrying the camera at
/// `t_cb`: centre and unit direction.
pub fn oracle_ray(nav: &[f64], t_cb: &[f64], f: f64, u0: f64, u: f64, v: f64) -> (Vec3, Vec3) {
    let (rn, rc) = (rot_params(nav), rot_params(t_cb));
    let c = rn * Vec3::new(t_cb[0], t_cb[1], t_cb[2]) + Vec3::new(nav[0], nav[1], nav[2]);
    let d = rn * rc * Vec3::new((u - u0) / f, v / f, 1.0);
    (c, d.normalize())
}

/// Point on the first line nearest the second, from the 2×2 normal equations.
pub fn oracle_closest(c1: &Vec3, d1: &Vec3, c2: &Vec3, d2: &Vec3) -> Vec3 {
    let w = c2 - c1;
    let (a, b, c) = (d1.dot(d1), d1.dot(d2), d2.dot(d2));
    let (p, q) = (w.dot(d1), w.dot(d2));
    let s = (p * c - b * q) / (a * c - b * b);
    c1 + d1 * s
}

pub fn oracle_project(nav: &[f64], t_cb: &[f64], f: f64, u0: f64, p: &Vec3) -> (f64, f64) {
    let (rn, rc) = (rot_params(nav), rot_params(t_cb));
    let xb = rn.transpose() * (p - Vec3::new(nav[0], nav[1], nav[2]));
    let xc = rc.transpose() * (xb - Vec3::new(t_cb[0], t_cb[1], t_cb[2]));
    (f * xc.x / xc.z + u0, f * xc.y / xc.z)
}

pub fn oracle_plane_hit(c: &Vec3, d: &Vec3, plane: &Plane) -> Vec3 {
    let n = Vec3::new(plane.a, plane.b, plane.c);
    c + d * (-(n.dot(c) + plane.d) / n.dot(d))
}

/// Draws from `N(mean, cov)` through a Cholesky factor.
pub struct Gaussian {
    mean: DVector<f64>,
    l: DMatrix<f64>,
}

impl Gaussian {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        let l = cov.cholesky().expect("covariance must be positive definite").l();
        Self { mean, l }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> DVector<f64> {
        let z = DVector::from_fn(self.mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mean + &self.l * z
    }
}

pub fn sample_cov(xs: &[DVector<f64>]) -> DMatrix<f64> {
    let n = xs.len() as f64;
    let mean = xs.iter().fold(DVector::zeros(xs[0].len()), |a, x| a + x) / n;
    let mut c = DMatrix::zeros(mean.len(), mean.len());
    for x in xs {
        let d = x - &mean;
        c += &d * d.transpose();
    }
    c / (n - 1.0)
}

pub fn rel_frobenius(estimate: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    (estimate - reference).norm() / reference.norm()
}

fn dm3(m: &Matrix3<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(3, 3, m.as_slice())
}

/// Two observations of one point with realistic navigation and image noise.
pub struct Geometry {
    pub name: &'static str,
    pub point: Vec3,
    pub t_cb: [f64; 6],
    pub navs: [[f64; 6]; 2],
    pub pixels: [(f64, f64); 2],
    pub nav_cov: Matrix6<f64>,
    pub intr: Intrinsics,
    pub noise: NoiseConfig,
    /// Observed-pixel offset for the reprojection checks.
    pub offset: (f64, f64),
}

impl Geometry {
    pub fn t_cb_pose(&self) -> Pose6 {
        Pose6::from_params(&self.t_cb)
    }

    pub fn observation(&self, k: usize) -> ObservationRay {
        let (u, v) = self.pixels[k];
        ObservationRay::new(
            k as u32,
            0,
            PixelPoint::new(u, v),
            Pose6::from_params(&self.navs[k]),
            self.nav_cov,
            &self.t_cb_pose(),
            &self.intr,
        )
    }
}

fn ladybird_nav_cov() -> Matrix6<f64> {
    let a = [0.2362f64, 0.2636, 0.1053].map(f64::to_radians);
    Matrix6::from_diagonal(&nalgebra::Vector6::new(
        1.052e-2f64.powi(2),
        1.305e-2f64.powi(2),
        1.118e-2f64.powi(2),
        a[0] * a[0],
        a[1] * a[1],
        a[2] * a[2],
    ))
}

/// Body pose that puts the camera at `centre` looking at `target`, turned by
/// `yaw` about its own y axis so the point lands off the principal point.
fn body_looking_at(centre: Vec3, target: Vec3, up: Vec3, yaw: f64, t_cb: &[f64; 6]) -> [f64; 6] {
    let z = (target - centre).normalize();
    let x = up.cross(&z).normalize();
    let y = z.cross(&x);
    let r_cw = Matrix3::from_columns(&[x, y, z]) * rot(&Vector3::new(0.0, yaw, 0.0));
    let r_nav = r_cw * rot_params(t_cb).transpose();
    let c_nav = centre - r_nav * Vec3::new(t_cb[0], t_cb[1], t_cb[2]);
    let aa = Rotation3::from_matrix_unchecked(r_nav).scaled_axis();
    [c_nav.x, c_nav.y, c_nav.z, aa.x, aa.y, aa.z]
}

/// The three fixed geometries: wide, narrow and upright.
pub fn geometries() -> Vec<Geometry> {
    let intr = Intrinsics::new(8.2 / (8.2 * 1.88e-3), 323.0, 648, 1.88e-3, 8.2 * 1.88e-3).unwrap();
    let noise = NoiseConfig { sigma_u: 0.5, sigma_v: 0.5, sigma_u0: 2.0, sigma_f: 0.1 / (8.2 * 1.88e-3) };
    #[allow(clippy::type_complexity)]
    let specs: [(&str, Vec3, [f64; 6], [Vec3; 2], Vec3, [f64; 2], (f64, f64)); 3] = [
        (
            "wide ground",
            Vec3::zeros(),
            [0.189, -0.142, -0.794, -0.822, 0.738, -1.429],
            [Vec3::new(-1.0, 0.2, 1.2), Vec3::new(0.6, -0.9, 1.1)],
            Vec3::z(),
            [0.05, -0.1],
            (24.0, 18.0),
        ),
        (
            "narrow oblique",
            Vec3::new(0.3, -0.2, 0.0),
            [0.189, -0.142, -0.794, -0.822, 0.738, -1.429],
            [Vec3::new(-2.5, 0.0, 1.0), Vec3::new(-2.3, 0.5, 1.05)],
            Vec3::z(),
            [0.12, -0.08],
            (-20.0, 25.0),
        ),
        (
            "upright",
            Vec3::new(1.0, 2.0, 1.5),
            [0.044, -0.133, -0.660, 1.409, 1.400, -1.078],
            [Vec3::new(-1.0, 0.0, 0.5), Vec3::new(-1.0, 3.5, 0.2)],
            Vec3::z(),
            [0.2, -0.15],
            (30.0, -10.0),
        ),
    ];
    specs
        .into_iter()
        .map(|(name, point, t_cb, centres, up, yaws, offset)| {
            let navs = [0, 1].map(|k| body_looking_at(centres[k], point, up, yaws[k], &t_cb));
            let pixels = [0, 1].map(|k| oracle_project(&navs[k], &t_cb, intr.f_px, intr.u0, &point));
            Geometry { name, point, t_cb, navs, pixels, nav_cov: ladybird_nav_cov(), intr, noise, offset }
        })
        .collect()
}

/// Stacked input layout for the pair oracle:
/// `u1 v1 nav1(6) u2 v2 nav2(6) f u0`.
fn pair_input_gaussian(g: &Geometry) -> Gaussian {
    let mut mean = DVector::zeros(18);
    let mut cov = DMatrix::zeros(18, 18);
    for k in 0..2 {
        let o = 8 * k;
        mean[o] = g.pixels[k].0;
        mean[o + 1] = g.pixels[k].1;
        cov[(o, o)] = g.noise.sigma_u.powi(2);
        cov[(o + 1, o + 1)] = g.noise.sigma_v.powi(2);
        for i in 0..6 {
            mean[o + 2 + i] = g.navs[k][i];
        }
        cov.view_mut((o + 2, o + 2), (6, 6)).copy_from(&g.nav_cov);
    }
    mean[16] = g.intr.f_px;
    mean[17] = g.intr.u0;
    cov[(16, 16)] = g.noise.sigma_f.powi(2);
    cov[(17, 17)] = g.noise.sigma_u0.powi(2);
    Gaussian::new(mean, cov)
}

/// Relative Frobenius error of the propagated pair-triangulation covariance
/// against `n` Monte-Carlo samples.
pub fn pair_covariance_error(g: &Geometry, n: usize, seed: u64) -> f64 {
    let (_, sigma) = pair_estimate(&g.observation(0), &g.observation(1), &g.t_cb_pose(), &g.intr, &g.noise).unwrap();
    let dist = pair_input_gaussian(g);
    let mut rng = rng(seed);
    let pts: Vec<DVector<f64>> = (0..n)
        .map(|_| {
            let x = dist.sample(&mut rng);
            let (f, u0) = (x[16], x[17]);
            let (c1, d1) = oracle_ray(&x.as_slice()[2..8], &g.t_cb, f, u0, x[0], x[1]);
            let (c2, d2) = oracle_ray(&x.as_slice()[10..16], &g.t_cb, f, u0, x[8], x[9]);
            let p = oracle_closest(&c1, &d1, &c2, &d2);
            DVector::from_column_slice(p.as_slice())
        })
        .collect();
    rel_frobenius(&dm3(&sigma), &sample_cov(&pts))
}

/// Relative error of the propagated reprojection-error variance of the first
/// observation against `n` Monte-Carlo samples. `t_cb_sigma` adds extrinsic
/// uncertainty (metres, radians) when non-zero.
pub fn reprojection_variance_error(g: &Geometry, n: usize, seed: u64, t_cb_sigma: (f64, f64)) -> f64 {
    let (p_hat, sigma_p) = pair_estimate(&g.observation(0), &g.observation(1), &g.t_cb_pose(), &g.intr, &g.noise).unwrap();
    let observed = PixelPoint::new(g.pixels[0].0 + g.offset.0, g.pixels[0].1 + g.offset.1);
    let (st, sr) = t_cb_sigma;
    let t_cb_cov = Matrix6::from_diagonal(&nalgebra::Vector6::new(st * st, st * st, st * st, sr * sr, sr * sr, sr * sr));
    let est = reprojection_variance(&ReprojectionInputs {
        p_hat,
        sigma_p,
        observed,
        nav_pose: Pose6::from_params(&g.navs[0]),
        nav_cov: g.nav_cov,
        t_cb: g.t_cb_pose(),
        t_cb_cov,
        intrinsics: g.intr,
        noise: g.noise,
    })
    .unwrap();

    // p(3) u v nav(6) f u0 t_cb(6)
    let mut mean = DVector::zeros(19);
    let mut cov = DMatrix::zeros(19, 19);
    mean.rows_mut(0, 3).copy_from(&p_hat);
    cov.view_mut((0, 0), (3, 3)).copy_from(&sigma_p);
    mean[3] = observed.u;
    mean[4] = observed.v;
    cov[(3, 3)] = g.noise.sigma_u.powi(2);
    cov[(4, 4)] = g.noise.sigma_v.powi(2);
    for i in 0..6 {
        mean[5 + i] = g.navs[0][i];
        mean[13 + i] = g.t_cb[i];
    }
    cov.view_mut((5, 5), (6, 6)).copy_from(&g.nav_cov);
    mean[11] = g.intr.f_px;
    mean[12] = g.intr.u0;
    cov[(11, 11)] = g.noise.sigma_f.powi(2);
    cov[(12, 12)] = g.noise.sigma_u0.powi(2);
    for i in 0..6 {
        // keep the factorisation well posed when the extrinsics are exact
        cov[(13 + i, 13 + i)] = t_cb_cov[(i, i)].max(1e-30);
    }
    let dist = Gaussian::new(mean, cov);
    let mut rng = rng(seed);
    let es: Vec<DVector<f64>> = (0..n)
        .map(|_| {
            let x = dist.sample(&mut rng);
            let p = Vec3::new(x[0], x[1], x[2]);
            let (u, v) = oracle_project(&x.as_slice()[5..11], &x.as_slice()[13..19], x[11], x[12], &p);
            DVector::from_element(1, (u - x[3]).hypot(v - x[4]))
        })
        .collect();
    let mc = sample_cov(&es)[(0, 0)];
    (est.var_e - mc).abs() / mc
}

/// Relative Frobenius error of the plane-projection covariance of the first
/// observation against `n` Monte-Carlo samples.
pub fn plane_projection_error(g: &Geometry, n: usize, seed: u64) -> f64 {
    // plane through the point, tilted so neither ray is parallel to it
    let normal = Vec3::new(0.1, -0.2, 1.0).normalize();
    let plane = Plane { a: -normal.x / normal.z, b: -normal.y / normal.z, c: -1.0, d: 0.0 };
    let plane = Plane { d: -(plane.a * g.point.x + plane.b * g.point.y + plane.c * g.point.z), ..plane };
    let (st, sr) = (0.02, 0.01);
    let q_tcb = Matrix6::from_diagonal(&nalgebra::Vector6::new(st * st, st * st, st * st, sr * sr, sr * sr, sr * sr));
    let (_, cov) = project_with_uncertainty(&g.observation(0), &plane, &g.t_cb_pose(), &q_tcb, &g.intr, &g.noise).unwrap();

    // u v nav(6) f u0 t_cb(6)
    let mut mean = DVector::zeros(16);
    let mut q = DMatrix::zeros(16, 16);
    mean[0] = g.pixels[0].0;
    mean[1] = g.pixels[0].1;
    q[(0, 0)] = g.noise.sigma_u.powi(2);
    q[(1, 1)] = g.noise.sigma_v.powi(2);
    for i in 0..6 {
        mean[2 + i] = g.navs[0][i];
        mean[10 + i] = g.t_cb[i];
    }
    q.view_mut((2, 2), (6, 6)).copy_from(&g.nav_cov);
    mean[8] = g.intr.f_px;
    mean[9] = g.intr.u0;
    q[(8, 8)] = g.noise.sigma_f.powi(2);
    q[(9, 9)] = g.noise.sigma_u0.powi(2);
    q.view_mut((10, 10), (6, 6)).copy_from(&q_tcb);
    let dist = Gaussian::new(mean, q);
    let mut rng = rng(seed);
    let pts: Vec<DVector<f64>> = (0..n)
        .map(|_| {
            let x = dist.sample(&mut rng);
            let (c, d) = oracle_ray(&x.as_slice()[2..8], &x.as_slice()[10..16], x[8], x[9], x[0], x[1]);
            DVector::from_column_slice(oracle_plane_hit(&c, &d, &plane).as_slice())
        })
        .collect();
    rel_frobenius(&dm3(&cov), &sample_cov(&pts))
}

/// Relative Frobenius error of the ensemble covariance on a 6-D standard
/// normal with 250 walkers × 200 iterations.
pub fn sampler_gaussian_error(seed: u64) -> f64 {
    use linecal::solve::{ensemble_sample, sample_covariance, EnsembleConfig};
    let cfg = EnsembleConfig { n_walkers: 250, n_iterations: 200, init_scale: vec![1.0; 6], seed, ..Default::default() };
    let s = ensemble_sample(|x: &[f64]| -0.5 * x.iter().map(|v| v * v).sum::<f64>(), &[0.0; 6], &cfg).unwrap();
    let (_, q) = sample_covariance(&s).unwrap();
    rel_frobenius(q.matrix(), &DMatrix::identity(6, 6))
}
