//! On-disk formats: JSON datasets, results and ground truth, CSV tables,
//! TOML run configuration and the run manifest.
//!
//! Floats are written in Rust's shortest round-trip form, so every value
//! read back is bit-identical to the one written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Matrix6};
use serde::{Deserialize, Serialize};

use crate::camera::Intrinsics;
use crate::geom::{euler_cov_to_axis_angle_cov, euler_to_rotation, rotation_to_axis_angle, EulerZYX, Pose6, Vec3};
use crate::likelihood::{Dataset, NoiseConfig, Observation, ReprojectionRecord};
use crate::pipeline::{BasinGrid, CalibrationResult, MappedPoint, OutlierTrace, PlaneFit};
use crate::solve::{EnsembleConfig, PosteriorSamples, PowellConfig};
use crate::synth::{GroundTruth, ScenarioConfig};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Schema { path: PathBuf, msg: String },
}

pub type IoResult<T> = std::result::Result<T, IoError>;

fn schema(path: &Path, msg: impl Into<String>) -> IoError {
    IoError::Schema { path: path.to_path_buf(), msg: msg.into() }
}

fn read_text(path: &Path) -> IoResult<String> {
    fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_text(path: &Path, contents: &str) -> IoResult<()> {
    let io = |source| IoError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, contents).map_err(io)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("in-memory serialisation cannot fail");
    s.push('\n');
    s
}

fn from_json<T: for<'de> Deserialize<'de>>(path: &Path) -> IoResult<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| schema(path, e.to_string()))
}

fn row_major6(m: &Matrix6<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn row_major3(m: &Matrix3<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicsFile {
    pub f_px: f64,
    pub u0: f64,
    pub n_pixels: u32,
    pub ifov_mrad: f64,
    pub pixel_pitch_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseFile {
    pub sigma_u: f64,
    pub sigma_v: f64,
    pub sigma_u0: f64,
    pub sigma_f_mm: f64,
}

/// One row of the dataset. Exactly one of `nav_pose` (axis-angle) or
/// `nav_euler` (`[x, y, z, φx, φy, φz]`, radians) is given; with Euler
/// input `nav_cov` is in Euler coordinates too and is converted on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationFile {
    pub obs_id: u32,
    pub point_id: u32,
    pub u: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nav_pose: Option<[f64; 6]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nav_euler: Option<[f64; 6]>,
    /// Row-major 6×6.
    pub nav_cov: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub intrinsics: IntrinsicsFile,
    pub noise: NoiseFile,
    pub observations: Vec<ObservationFile>,
}

impl DatasetFile {
    pub fn from_dataset(d: &Dataset) -> Self {
        let i = &d.intrinsics;
        DatasetFile {
            intrinsics: IntrinsicsFile {
                f_px: i.f_px,
                u0: i.u0,
                n_pixels: i.n_pixels,
                ifov_mrad: i.ifov * 1e3,
                pixel_pitch_mm: i.pixel_pitch,
            },
            noise: NoiseFile {
                sigma_u: d.noise.sigma_u,
                sigma_v: d.noise.sigma_v,
                sigma_u0: d.noise.sigma_u0,
                sigma_f_mm: d.noise.sigma_f * i.pixel_pitch,
            },
            observations: d
                .observations
                .iter()
                .map(|o| ObservationFile {
                    obs_id: o.obs_id,
                    point_id: o.point_id,
                    u: o.u,
                    nav_pose: Some(o.nav_pose.params()),
                    nav_euler: None,
                    nav_cov: row_major6(&o.nav_cov),
                })
                .collect(),
        }
    }

    /// Converts and validates; `path` only labels diagnostics.
    pub fn into_dataset(self, path: &Path) -> IoResult<Dataset> {
        let fi = &self.intrinsics;
        let intrinsics = Intrinsics::new(fi.f_px, fi.u0, fi.n_pixels, fi.ifov_mrad * 1e-3, fi.pixel_pitch_mm)
            .map_err(|e| schema(path, format!("intrinsics: {e}")))?;
        if !(fi.pixel_pitch_mm > 0.0) {
            return Err(schema(path, "intrinsics.pixel_pitch_mm must be positive"));
        }
        let noise = NoiseConfig {
            sigma_u: self.noise.sigma_u,
            sigma_v: self.noise.sigma_v,
            sigma_u0: self.noise.sigma_u0,
            sigma_f: self.noise.sigma_f_mm / fi.pixel_pitch_mm,
        };
        let mut observations = Vec::with_capacity(self.observations.len());
        for (k, o) in self.observations.into_iter().enumerate() {
            let at = |msg: String| schema(path, format!("observations[{k}]: {msg}"));
            if o.nav_cov.len() != 36 {
                return Err(at(format!("nav_cov needs 36 values, got {}", o.nav_cov.len())));
            }
            let cov = Matrix6::from_row_slice(&o.nav_cov);
            let (nav_pose, nav_cov) = match (o.nav_pose, o.nav_euler) {
                (Some(p), None) => (Pose6::from_params(&p), cov),
                (None, Some(e)) => {
                    if cov.fixed_view::<3, 3>(0, 3).iter().any(|v| *v != 0.0) {
                        return Err(at("nav_euler needs nav_cov without position-attitude cross terms".into()));
                    }
                    let angles = EulerZYX::new(e[3], e[4], e[5]);
                    let rot = euler_to_rotation(angles).map_err(|e| at(e.to_string()))?;
                    let q = euler_cov_to_axis_angle_cov(angles, &cov.fixed_view::<3, 3>(3, 3).into_owned())
                        .map_err(|e| at(e.to_string()))?;
                    let mut c = cov;
                    c.fixed_view_mut::<3, 3>(3, 3).copy_from(&q);
                    (Pose6::new(Vec3::new(e[0], e[1], e[2]), rotation_to_axis_angle(&rot)), c)
                }
                _ => return Err(at("give exactly one of nav_pose or nav_euler".into())),
            };
            observations.push(Observation { obs_id: o.obs_id, point_id: o.point_id, u: o.u, nav_pose, nav_cov });
        }
        let data = Dataset { observations, intrinsics, noise };
        data.validate().map_err(|e| schema(path, e.to_string()))?;
        Ok(data)
    }
}

pub fn dataset_json(data: &Dataset) -> String {
    to_json(&DatasetFile::from_dataset(data))
}

pub fn read_dataset(path: &Path) -> IoResult<Dataset> {
    from_json::<DatasetFile>(path)?.into_dataset(path)
}

pub fn write_dataset(path: &Path, data: &Dataset) -> IoResult<()> {
    write_text(path, &dataset_json(data))
}

pub fn ground_truth_json(truth: &GroundTruth) -> String {
    to_json(truth)
}

pub fn write_ground_truth(path: &Path, truth: &GroundTruth) -> IoResult<()> {
    write_text(path, &ground_truth_json(truth))
}

pub fn read_ground_truth(path: &Path) -> IoResult<GroundTruth> {
    from_json(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFile {
    pub point_id: u32,
    pub p_hat: [f64; 3],
    /// Row-major 3×3.
    pub sigma: Vec<f64>,
    pub n_pairs_used: usize,
}

/// Serialised [`CalibrationResult`]; posterior fields are absent when
/// sampling was skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub pose: [f64; 6],
    pub converged: bool,
    pub nll: f64,
    pub nll_start: f64,
    pub n_evals: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posterior_mean: Option<[f64; 6]>,
    /// Row-major 6×6.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posterior_cov: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posterior_sigma: Option<[f64; 6]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance_rate: Option<f64>,
    pub points: Vec<PointFile>,
    pub records: Vec<ReprojectionRecord>,
}

impl ResultFile {
    pub fn from_result(r: &CalibrationResult) -> Self {
        ResultFile {
            pose: r.pose.params(),
            converged: r.converged,
            nll: r.nll,
            nll_start: r.nll_start,
            n_evals: r.n_evals,
            posterior_mean: r.posterior_mean.map(|m| std::array::from_fn(|i| m[i])),
            posterior_cov: r.posterior_cov.as_ref().map(row_major6),
            posterior_sigma: r.posterior_sigma(),
            acceptance_rate: r.samples.as_ref().map(|s| s.acceptance_rate),
            points: r
                .points
                .iter()
                .map(|p| PointFile {
                    point_id: p.point_id,
                    p_hat: [p.p_hat.x, p.p_hat.y, p.p_hat.z],
                    sigma: row_major3(&p.sigma),
                    n_pairs_used: p.n_pairs_used,
                })
                .collect(),
            records: r.records.clone(),
        }
    }

    pub fn pose(&self) -> Pose6 {
        Pose6::from_params(&self.pose)
    }

    pub fn covariance(&self) -> Option<Matrix6<f64>> {
        self.posterior_cov.as_ref().filter(|c| c.len() == 36).map(|c| Matrix6::from_row_slice(c))
    }
}

pub fn result_json(r: &CalibrationResult) -> String {
    to_json(&ResultFile::from_result(r))
}

pub fn write_result(path: &Path, r: &CalibrationResult) -> IoResult<()> {
    write_text(path, &result_json(r))
}

pub fn read_result(path: &Path) -> IoResult<ResultFile> {
    let r: ResultFile = from_json(path)?;
    if r.posterior_cov.as_ref().is_some_and(|c| c.len() != 36) {
        return Err(schema(path, "posterior_cov needs 36 row-major values"));
    }
    Ok(r)
}

fn csv(header: &str, rows: impl Iterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

fn join(vals: impl IntoIterator<Item = f64>) -> String {
    let mut s = String::new();
    for (i, v) in vals.into_iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v}").unwrap();
    }
    s
}

pub fn records_csv(records: &[ReprojectionRecord]) -> String {
    csv(
        "point_id,obs_id,e,var_e,u_hat,v_hat,floored",
        records.iter().map(|r| {
            format!("{},{},{},{},{},{},{}", r.point_id, r.obs_id, r.e, r.var_e, r.u_hat, r.v_hat, r.floored)
        }),
    )
}

/// Six pose parameters and the log likelihood per sample.
pub fn samples_csv(s: &PosteriorSamples) -> String {
    csv(
        "rx,ry,rz,ax,ay,az,log_likelihood",
        s.samples.iter().zip(&s.log_likelihoods).map(|(x, l)| join(x.iter().copied().chain([*l]))),
    )
}

/// One row per (iteration, observation) with the mean error and whether
/// that observation was removed at the iteration.
pub fn trace_csv(t: &OutlierTrace) -> String {
    csv(
        "iteration,remaining,obs_id,mean_error,removed",
        t.iterations.iter().enumerate().flat_map(|(k, it)| {
            it.mean_errors.iter().map(move |(id, e)| {
                format!("{k},{},{id},{e},{}", it.remaining_obs_ids.len(), it.removed_obs_id == Some(*id))
            })
        }),
    )
}

/// Projected points with their row-major 3×3 covariance.
pub fn projections_csv(m: &[MappedPoint]) -> String {
    csv(
        "point_id,obs_id,x,y,z,cxx,cxy,cxz,cyx,cyy,cyz,czx,czy,czz",
        m.iter().map(|p| format!("{},{},{}", p.point_id, p.obs_id, join([p.p.x, p.p.y, p.p.z].into_iter().chain(row_major3(&p.cov))))),
    )
}

pub fn spread_csv(spread: &std::collections::BTreeMap<u32, f64>) -> String {
    csv("point_id,rms_spread", spread.iter().map(|(id, s)| format!("{id},{s}")))
}

pub fn trace_json(t: &OutlierTrace) -> String {
    to_json(t)
}

pub fn plane_json(fit: &PlaneFit) -> String {
    to_json(fit)
}

pub fn basin_csv(g: &BasinGrid) -> String {
    csv(
        "d,phi,start_rx,start_ry,start_rz,start_ax,start_ay,start_az,mahalanobis,converged,success",
        g.cells.iter().map(|c| {
            format!("{},{},{},{}", join([c.d, c.phi].into_iter().chain(c.start.params())), c.mahalanobis, c.converged, c.success)
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutlierSettings {
    pub threshold: f64,
    pub max_removals: usize,
}

impl Default for OutlierSettings {
    fn default() -> Self {
        Self { threshold: crate::pipeline::DEFAULT_OUTLIER_THRESHOLD, max_removals: usize::MAX }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasinSettings {
    pub d_max: f64,
    pub phi_max_deg: f64,
    pub n_d: usize,
    pub n_phi: usize,
    pub success_threshold: f64,
}

impl Default for BasinSettings {
    fn default() -> Self {
        Self { d_max: 0.5, phi_max_deg: 20.0, n_d: 5, n_phi: 5, success_threshold: crate::pipeline::DEFAULT_BASIN_THRESHOLD }
    }
}

/// Every tunable of a run. Sections may be omitted; `[scenario]` may name a
/// `preset` and override any of its fields.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RunConfig {
    pub scenario: Option<ScenarioConfig>,
    pub powell: PowellConfig,
    pub mcmc: EnsembleConfig,
    pub outliers: OutlierSettings,
    pub basin: BasinSettings,
}

/// Recursively overlays `over` on `base`.
fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> IoResult<Self> {
        let mut root: toml::Table = toml::from_str(text).map_err(|e| schema(path, e.to_string()))?;
        let section = |root: &mut toml::Table, name: &str| root.remove(name).unwrap_or(toml::Value::Table(Default::default()));
        let err = |name: &str, e: toml::de::Error| schema(path, format!("[{name}] {e}"));

        let scenario = match root.remove("scenario") {
            None => None,
            Some(toml::Value::Table(mut t)) => {
                let mut base = match t.remove("preset") {
                    Some(toml::Value::String(name)) => toml::Value::try_from(
                        ScenarioConfig::preset(&name).map_err(|e| schema(path, format!("[scenario] {e}")))?,
                    )
                    .expect("preset serialises"),
                    Some(_) => return Err(schema(path, "[scenario] preset must be a string")),
                    None => toml::Value::Table(Default::default()),
                };
                merge(&mut base, toml::Value::Table(t));
                Some(base.try_into().map_err(|e| err("scenario", e))?)
            }
            Some(_) => return Err(schema(path, "scenario must be a table")),
        };
        let powell = section(&mut root, "powell").try_into().map_err(|e| err("powell", e))?;
        let mcmc = section(&mut root, "mcmc").try_into().map_err(|e| err("mcmc", e))?;
        let outliers = section(&mut root, "outliers").try_into().map_err(|e| err("outliers", e))?;
        let basin = section(&mut root, "basin").try_into().map_err(|e| err("basin", e))?;
        if let Some(k) = root.keys().next() {
            return Err(schema(path, format!("unknown section [{k}]")));
        }
        Ok(RunConfig { scenario, powell, mcmc, outliers, basin })
    }

    pub fn load(path: &Path) -> IoResult<Self> {
        Self::from_toml(&read_text(path)?, path)
    }
}

/// Provenance record written next to a command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        to_json(self)
    }
}
