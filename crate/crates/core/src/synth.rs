//! Synthetic calibration scenarios with known ground truth.
//!
//! Each observation places the platform so that the pattern sits in front of
//! the camera, then, per pattern point, slides the platform along its own
//! forward axis until that point lies on the scan plane. The result is one
//! `(u, nav pose)` pair per point, as a real traversal would give.

use nalgebra::{Matrix3, Matrix6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::camera::Intrinsics;
use crate::error::{Error, Result};
use crate::geom::{
    axis_angle_to_rotation, euler_cov_to_axis_angle_cov, euler_to_rotation, rotation_to_axis_angle,
    rotation_to_euler, AxisAngle, EulerZYX, Pose6, Vec3,
};
use crate::likelihood::{Dataset, NoiseConfig, Observation};

const MAX_ATTEMPTS: usize = 100;
/// Generated pixels stay this far from either end of the sensor.
pub const EDGE_MARGIN: f64 = 10.0;

/// Ranges the platform pose of every observation is drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseSampler {
    /// Platform heading interval, degrees; observations are stratified over it.
    pub heading_deg: [f64; 2],
    /// Roll magnitude interval, degrees; the sign is random.
    pub roll_deg: [f64; 2],
    /// Pitch interval, degrees.
    pub pitch_deg: [f64; 2],
    /// Distance from camera to pattern centre along the optical axis, metres.
    pub range_m: [f64; 2],
    /// Maximum offset of the pattern centre along the scan line, metres.
    pub lateral_m: f64,
    /// Fixed height of the body origin above the pattern centre (ground
    /// vehicles). When set, the range follows from the camera mounting and
    /// `range_m` is ignored.
    #[serde(default)]
    pub body_height_m: Option<f64>,
}

/// Standard deviations used both to perturb the data and to fill in the
/// reported covariances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevels {
    pub sigma_u: f64,
    pub sigma_v: f64,
    pub sigma_u0: f64,
    pub sigma_f_mm: f64,
    pub nav_pos_sigma_m: [f64; 3],
    /// Per Euler angle `(φx, φy, φz)`, degrees.
    pub nav_att_sigma_deg: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub focal_mm: f64,
    pub ifov_mrad: f64,
    pub u0: f64,
    pub n_pixels: u32,
}

impl CameraModel {
    /// Pixel pitch follows from `focal · IFOV`.
    pub fn intrinsics(&self) -> Result<Intrinsics> {
        let ifov = self.ifov_mrad * 1e-3;
        Intrinsics::from_focal_mm(self.focal_mm, self.focal_mm * ifov, self.u0, self.n_pixels, ifov)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub true_t_cb: Pose6,
    pub pattern: Vec<Vec3>,
    pub n_observations: usize,
    pub sampler: PoseSampler,
    pub noise: NoiseLevels,
    pub camera: CameraModel,
    /// Multiplies every sampled perturbation; `0` gives exact data while the
    /// reported covariances stay as configured.
    pub noise_scale: f64,
    pub seed: u64,
}

/// `rows × cols` grid with the given spacing, centred on `centre`, spanning
/// the directions `row_dir` and `col_dir`.
pub fn grid_pattern(rows: usize, cols: usize, spacing: f64, centre: Vec3, row_dir: Vec3, col_dir: Vec3) -> Vec<Vec3> {
    let r0 = (rows as f64 - 1.0) / 2.0;
    let c0 = (cols as f64 - 1.0) / 2.0;
    let mut pts = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            pts.push(centre + row_dir * ((r as f64 - r0) * spacing) + col_dir * ((c as f64 - c0) * spacing));
        }
    }
    pts
}

impl ScenarioConfig {
    /// Ground vehicle, downward-pitched camera with a horizontal scan line,
    /// pattern flat on the ground, small roll from driving over a rail.
    pub fn ladybird() -> Self {
        Self {
            true_t_cb: Pose6::from_params(&[0.189, -0.142, -0.794, -0.822, 0.738, -1.429]),
            pattern: grid_pattern(3, 5, 0.1, Vec3::zeros(), Vec3::x(), Vec3::y()),
            n_observations: 16,
            sampler: PoseSampler {
                heading_deg: [0.0, 360.0],
                roll_deg: [0.0, 4.0],
                pitch_deg: [-1.0, 1.0],
                range_m: [2.0, 3.0],
                lateral_m: 0.15,
                body_height_m: Some(0.5),
            },
            noise: NoiseLevels {
                sigma_u: 0.5,
                sigma_v: 0.5,
                sigma_u0: 2.0,
                sigma_f_mm: 0.1,
                nav_pos_sigma_m: [1.052e-2, 1.305e-2, 1.118e-2],
                nav_att_sigma_deg: [2.362e-1, 2.636e-1, 1.053e-1],
            },
            camera: CameraModel { focal_mm: 8.2, ifov_mrad: 1.88, u0: 323.0, n_pixels: 648 },
            noise_scale: 1.0,
            seed: 0,
        }
    }

    /// Smaller platform, camera looking sideways and slightly up with a
    /// vertical scan line, pattern mounted upright, roll and pitch from a hill.
    pub fn shrimp() -> Self {
        Self {
            true_t_cb: Pose6::from_params(&[0.044, -0.133, -0.660, 1.409, 1.400, -1.078]),
            pattern: grid_pattern(3, 5, 0.1, Vec3::new(0.0, 0.0, -1.2), Vec3::z(), Vec3::x()),
            n_observations: 14,
            sampler: PoseSampler {
                heading_deg: [150.0, 210.0],
                roll_deg: [0.0, 17.0],
                pitch_deg: [-17.0, 17.0],
                range_m: [1.5, 2.5],
                lateral_m: 0.4,
                body_height_m: None,
            },
            noise: NoiseLevels {
                sigma_u: 0.5,
                sigma_v: 0.5,
                sigma_u0: 2.0,
                sigma_f_mm: 0.1,
                nav_pos_sigma_m: [4.520e-2, 4.369e-2, 4.887e-2],
                nav_att_sigma_deg: [7.534e-1, 7.284e-1, 8.416e-1],
            },
            camera: CameraModel { focal_mm: 6.2, ifov_mrad: 2.5, u0: 323.0, n_pixels: 648 },
            noise_scale: 1.0,
            seed: 0,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "ladybird" => Ok(Self::ladybird()),
            "shrimp" => Ok(Self::shrimp()),
            _ => Err(Error::InvalidArgument(format!("unknown preset '{name}' (expected ladybird or shrimp)"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_observations < 2 {
            return Err(Error::InvalidArgument("need at least 2 observations".into()));
        }
        if self.pattern.is_empty() {
            return Err(Error::InvalidArgument("pattern has no points".into()));
        }
        for (i, p) in self.pattern.iter().enumerate() {
            if self.pattern[..i].iter().any(|q| (p - q).norm() < 1e-9) {
                return Err(Error::InvalidArgument(format!("pattern point {i} duplicates an earlier one")));
            }
        }
        let s = &self.sampler;
        let ordered = |r: [f64; 2]| r[0] <= r[1] && r.iter().all(|v| v.is_finite());
        if !ordered(s.heading_deg) || !ordered(s.roll_deg) || !ordered(s.pitch_deg) || !ordered(s.range_m) {
            return Err(Error::InvalidArgument("sampler ranges must be finite and ordered".into()));
        }
        if !(s.range_m[0] > 0.0) || !(s.lateral_m >= 0.0) || s.body_height_m.is_some_and(|h| !h.is_finite()) {
            return Err(Error::InvalidArgument("range must be positive and lateral offset non-negative".into()));
        }
        if !(self.noise_scale >= 0.0) {
            return Err(Error::InvalidArgument("noise_scale must be non-negative".into()));
        }
        let n = &self.noise;
        let all = [n.sigma_u, n.sigma_v, n.sigma_u0, n.sigma_f_mm]
            .into_iter()
            .chain(n.nav_pos_sigma_m)
            .chain(n.nav_att_sigma_deg);
        if all.into_iter().any(|v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("noise levels must be finite and non-negative".into()));
        }
        self.camera.intrinsics()?;
        Ok(())
    }

    /// Image-side noise in pixels for the given intrinsics.
    pub fn noise_config(&self, intr: &Intrinsics) -> NoiseConfig {
        NoiseConfig {
            sigma_u: self.noise.sigma_u,
            sigma_v: self.noise.sigma_v,
            sigma_u0: self.noise.sigma_u0,
            sigma_f: self.noise.sigma_f_mm / intr.pixel_pitch,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub t_cb: Pose6,
    pub pattern_points: Vec<Vec3>,
    /// Parallel to the dataset's observation list.
    pub true_nav_poses: Vec<Pose6>,
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    r[0] + (r[1] - r[0]) * rng.random::<f64>()
}

struct Sighting {
    u: f64,
    body: Pose6,
}

/// Samples one observation: a platform attitude plus one along-track
/// position per pattern point.
fn sample_observation(
    cfg: &ScenarioConfig,
    intr: &Intrinsics,
    r_cb: &Matrix3<f64>,
    i: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<Sighting>> {
    let s = &cfg.sampler;
    let width = s.heading_deg[1] - s.heading_deg[0];
    let heading = (s.heading_deg[0] + width * (i as f64 + rng.random::<f64>()) / cfg.n_observations as f64).to_radians();
    let roll_mag = uniform(rng, s.roll_deg);
    let roll = if rng.random::<bool>() { roll_mag } else { -roll_mag }.to_radians();
    let pitch = uniform(rng, s.pitch_deg).to_radians();
    let range = uniform(rng, s.range_m);
    let lateral = uniform(rng, [-s.lateral_m, s.lateral_m]);

    let r_b = euler_to_rotation(EulerZYX::new(roll, pitch, heading)).ok()?.into_inner();
    let r_cw = r_b * r_cb;
    let (l, n, a) = (r_cw.column(0).into_owned(), r_cw.column(1).into_owned(), r_cw.column(2).into_owned());
    let forward = r_b.column(0).into_owned();
    let centre = cfg.pattern.iter().sum::<Vec3>() / cfg.pattern.len() as f64;
    let c = match s.body_height_m {
        None => centre - a * range - l * lateral,
        Some(h) => {
            // camera height is fixed by the mount; slide along the optical axis
            let cz = centre.z - h + (r_b * cfg.true_t_cb.r).z;
            let t = (centre.z - l.z * lateral - cz) / a.z;
            if !(t > 0.1) {
                return None;
            }
            centre - a * t - l * lateral
        }
    };
    let body_rot = rotation_to_axis_angle(&euler_to_rotation(EulerZYX::new(roll, pitch, heading)).ok()?);
    let hi = intr.n_pixels as f64 - EDGE_MARGIN;

    let mut out = Vec::with_capacity(cfg.pattern.len());
    for x in &cfg.pattern {
        // true v of the sighting; the sensor still reports v = 0
        let dv = gauss(rng) * cfg.noise.sigma_v * cfg.noise_scale;
        let m = n - a * (dv / intr.f_px);
        let mf = m.dot(&forward);
        if mf.abs() < 0.05 {
            return None;
        }
        let shift = m.dot(&(x - c)) / mf;
        let ck = c + forward * shift;
        let xc = r_cw.tr_mul(&(x - ck));
        if xc.z < 0.05 {
            return None;
        }
        let u = intr.f_px * xc.x / xc.z + intr.u0;
        if !(EDGE_MARGIN..=hi).contains(&u) {
            return None;
        }
        let u_obs = u + gauss(rng) * cfg.noise.sigma_u * cfg.noise_scale;
        let body = Pose6::new(ck - r_b * cfg.true_t_cb.r, body_rot);
        out.push(Sighting { u: u_obs, body });
    }
    Some(out)
}

/// Reported navigation pose and covariance for a true body pose.
fn noisy_nav(cfg: &ScenarioConfig, truth: &Pose6, rng: &mut ChaCha8Rng) -> Result<(Pose6, Matrix6<f64>)> {
    let nz = &cfg.noise;
    let k = cfg.noise_scale;
    let mut r = truth.r;
    for j in 0..3 {
        r[j] += gauss(rng) * nz.nav_pos_sigma_m[j] * k;
    }
    let e = rotation_to_euler(&truth.rotation());
    let sig: Vec<f64> = nz.nav_att_sigma_deg.iter().map(|d| d.to_radians()).collect();
    let e_rep = EulerZYX::new(
        e.phi_x + gauss(rng) * sig[0] * k,
        e.phi_y + gauss(rng) * sig[1] * k,
        e.phi_z + gauss(rng) * sig[2] * k,
    );
    let rot = rotation_to_axis_angle(&euler_to_rotation(e_rep)?);
    let q_e = Matrix3::from_diagonal(&Vec3::new(sig[0] * sig[0], sig[1] * sig[1], sig[2] * sig[2]));
    let q_rot = euler_cov_to_axis_angle_cov(e_rep, &q_e)?;
    let mut cov = Matrix6::zeros();
    for j in 0..3 {
        cov[(j, j)] = nz.nav_pos_sigma_m[j] * nz.nav_pos_sigma_m[j];
    }
    cov.fixed_view_mut::<3, 3>(3, 3).copy_from(&q_rot);
    Ok((Pose6::new(r, rot), cov))
}

/// Draws a dataset and the ground truth that generated it.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<(Dataset, GroundTruth)> {
    cfg.validate()?;
    let intr = cfg.camera.intrinsics()?;
    let r_cb = axis_angle_to_rotation(&cfg.true_t_cb.rot).into_inner();
    let mut observations = Vec::with_capacity(cfg.n_observations * cfg.pattern.len());
    let mut true_nav_poses = Vec::with_capacity(observations.capacity());
    for i in 0..cfg.n_observations {
        // one independent stream per observation
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64 + 1);
        let sightings = (0..MAX_ATTEMPTS)
            .find_map(|_| sample_observation(cfg, &intr, &r_cb, i, &mut rng))
            .ok_or_else(|| {
                Error::Generation(format!("observation {i}: no visible pose after {MAX_ATTEMPTS} attempts"))
            })?;
        for (point_id, s) in sightings.into_iter().enumerate() {
            let (nav_pose, nav_cov) = noisy_nav(cfg, &s.body, &mut rng)?;
            observations.push(Observation { obs_id: i as u32, point_id: point_id as u32, u: s.u, nav_pose, nav_cov });
            true_nav_poses.push(s.body);
        }
    }
    let data = Dataset { observations, intrinsics: intr, noise: cfg.noise_config(&intr) };
    let truth = GroundTruth { t_cb: cfg.true_t_cb, pattern_points: cfg.pattern.clone(), true_nav_poses };
    Ok((data, truth))
}

/// Shifts every `u` of observation `obs_id` by `pixel_offset`.
pub fn corrupt_observation(data: &Dataset, obs_id: u32, pixel_offset: f64) -> Result<Dataset> {
    if !data.observations.iter().any(|o| o.obs_id == obs_id) {
        return Err(Error::InvalidArgument(format!("unknown observation id {obs_id}")));
    }
    let mut out = data.clone();
    for o in out.observations.iter_mut().filter(|o| o.obs_id == obs_id) {
        o.u += pixel_offset;
    }
    Ok(out)
}

/// Start pose displaced from `t` by translation distance `d` and rotation
/// angle `phi` along random directions (rotation applied in the body frame).
pub fn perturb_pose(t: &Pose6, d: f64, phi: f64, rng: &mut impl Rng) -> Pose6 {
    let unit = |rng: &mut dyn rand::RngCore| loop {
        let v = Vec3::new(
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    };
    let dr = unit(rng) * d;
    let delta = AxisAngle(unit(rng) * phi);
    if phi == 0.0 {
        return Pose6::new(t.r + dr, t.rot);
    }
    let rot = t.rotation().into_inner() * axis_angle_to_rotation(&delta).into_inner();
    let rot = rotation_to_axis_angle(&crate::geom::RotationMatrix::new(rot).unwrap_or_else(|_| t.rotation()));
    Pose6::new(t.r + dr, rot)
}
