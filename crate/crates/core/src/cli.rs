//! `linecal` command line: argument parsing and the per-command drivers.
//!
//! Exit codes: 0 success, 2 bad input (arguments, files, schema),
//! 3 numerical failure (non-convergence, degenerate geometry).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{Matrix3, Matrix6};

use crate::error::Error;
use crate::geom::{
    axis_angle_to_rotation, euler_cov_to_axis_angle_cov, euler_to_rotation, rotation_to_axis_angle, rotation_to_euler,
    AxisAngle, EulerZYX, Pose6,
};
use crate::io::{self, IoError, RunConfig, RunManifest};
use crate::pipeline::{self, BasinSpec};
use crate::synth::{generate_scenario, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "linecal", version, about = "Line-scan camera to body extrinsic calibration")]
pub struct Cli {
    /// Seed for every random stage; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs sequentially and is bit-reproducible.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset and its ground truth.
    Synth {
        /// Scenario preset when the config has no [scenario] section.
        #[arg(long, default_value = "ladybird")]
        preset: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the camera pose and its posterior covariance.
    Calibrate {
        #[command(flatten)]
        input: DataAndInit,
        #[arg(long)]
        skip_mcmc: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Iteratively drop the observation with the largest mean error.
    Outliers {
        #[command(flatten)]
        input: DataAndInit,
        /// Mean reprojection error threshold, pixels.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        max_removals: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project every observation onto the best-fit pattern plane.
    Map {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimise from a grid of perturbed starts around a calibrated pose.
    Basin {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        d_max: Option<f64>,
        #[arg(long)]
        phi_max_deg: Option<f64>,
        #[arg(long)]
        n_d: Option<usize>,
        #[arg(long)]
        n_phi: Option<usize>,
        #[arg(long)]
        success_threshold: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a pose (and optionally its covariance) between rotation forms.
    ConvertPose {
        /// 3 rotation values or 6 pose values, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        pose: String,
        #[arg(long, value_enum)]
        from: Repr,
        #[arg(long, value_enum)]
        to: Repr,
        /// Per-component standard deviations (3 or 6), comma separated.
        #[arg(long, allow_hyphen_values = true)]
        sigma: Option<String>,
        /// Angles (and angular sigmas) are in degrees on input and output.
        #[arg(long)]
        degrees: bool,
        /// Also write the JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Repr {
    Euler,
    AxisAngle,
}

#[derive(Debug, Args)]
pub struct DataAndInit {
    #[arg(long)]
    pub data: PathBuf,
    /// Initial pose `x,y,z,ax,ay,az` (axis-angle, radians).
    #[arg(long, allow_hyphen_values = true)]
    pub init: String,
}

/// Failure of a command, already classified by exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub msg: String,
}

impl CliError {
    fn input(msg: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, msg: msg.into() }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) | Error::InsufficientObservations { .. } => EXIT_INPUT,
            _ => EXIT_NUMERICAL,
        };
        Self { code, msg: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::input(format!("{what}: cannot parse '{t}'"))))
        .collect()
}

fn parse_pose(s: &str) -> CliResult<Pose6> {
    let v = parse_list(s, "--init")?;
    let p: [f64; 6] = v.try_into().map_err(|_| CliError::input("--init needs 6 comma-separated values"))?;
    let pose = Pose6::from_params(&p);
    if !pose.is_finite() {
        return Err(CliError::input("--init must be finite"));
    }
    Ok(pose)
}

struct Ctx {
    seed: Option<u64>,
    threads: usize,
    config: RunConfig,
    config_path: Option<PathBuf>,
}

impl Ctx {
    fn parallel(&self) -> bool {
        self.threads > 1
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(self.config.mcmc.seed)
    }
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), written: Vec::new() }
    }

    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        io::write_text(&self.dir.join(name), contents)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn manifest(&self, command: &str, ctx: &Ctx, config: serde_json::Value, inputs: &[&Path], start: Instant) -> CliResult<()> {
        let mut inputs: Vec<String> = inputs.iter().map(|p| p.display().to_string()).collect();
        if let Some(c) = &ctx.config_path {
            inputs.push(c.display().to_string());
        }
        let m = RunManifest {
            command: command.to_string(),
            config,
            seed: ctx.seed(),
            inputs,
            outputs: self.written.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        io::write_text(&self.dir.join("manifest.json"), &m.to_json())?;
        Ok(())
    }
}

fn json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("config serialises")
}

fn cmd_synth(ctx: &Ctx, preset: &str, out: &Path) -> CliResult<()> {
    let start = Instant::now();
    let mut cfg = match &ctx.config.scenario {
        Some(c) => c.clone(),
        None => ScenarioConfig::preset(preset)?,
    };
    if let Some(s) = ctx.seed {
        cfg.seed = s;
    }
    let (data, truth) = generate_scenario(&cfg).map_err(|e| match e {
        Error::Generation(_) => CliError::from(e),
        other => CliError::input(other.to_string()),
    })?;
    let mut o = Outputs::new(out);
    o.write("dataset.json", &io::dataset_json(&data))?;
    o.write("ground_truth.json", &io::ground_truth_json(&truth))?;
    o.manifest("synth", ctx, json(&cfg), &[], start)
}

fn cmd_calibrate(ctx: &Ctx, input: &DataAndInit, skip_mcmc: bool, out: &Path) -> CliResult<()> {
    let start = Instant::now();
    let data = io::read_dataset(&input.data)?;
    let x0 = parse_pose(&input.init)?;
    let mut ecfg = ctx.config.mcmc.clone();
    ecfg.seed = ctx.seed();
    ecfg.parallel = ctx.parallel();
    let r = pipeline::calibrate(&data, &x0, &ctx.config.powell, (!skip_mcmc).then_some(&ecfg))?;
    let mut o = Outputs::new(out);
    o.write("result.json", &io::result_json(&r))?;
    o.write("records.csv", &io::records_csv(&r.records))?;
    if let Some(s) = &r.samples {
        o.write("samples.csv", &io::samples_csv(s))?;
    }
    let config = serde_json::json!({ "powell": json(&ctx.config.powell), "mcmc": json(&ecfg), "skip_mcmc": skip_mcmc, "init": x0.params() });
    o.manifest("calibrate", ctx, config, &[&input.data], start)?;
    if !r.converged {
        return Err(CliError { code: EXIT_NUMERICAL, msg: "optimiser did not converge; sampling skipped".into() });
    }
    Ok(())
}

fn cmd_outliers(ctx: &Ctx, input: &DataAndInit, threshold: Option<f64>, max_removals: Option<usize>, out: &Path) -> CliResult<()> {
    let start = Instant::now();
    let data = io::read_dataset(&input.data)?;
    let x0 = parse_pose(&input.init)?;
    let mut settings = ctx.config.outliers.clone();
    if let Some(t) = threshold {
        settings.threshold = t;
    }
    if let Some(m) = max_removals {
        settings.max_removals = m;
    }
    let (pruned, trace) = pipeline::reject_outliers(&data, &x0, settings.threshold, settings.max_removals, &ctx.config.powell)?;
    let mut o = Outputs::new(out);
    o.write("trace.csv", &io::trace_csv(&trace))?;
    o.write("trace.json", &io::trace_json(&trace))?;
    o.write("dataset.json", &io::dataset_json(&pruned))?;
    let config = serde_json::json!({ "powell": json(&ctx.config.powell), "outliers": json(&settings), "init": x0.params() });
    o.manifest("outliers", ctx, config, &[&input.data], start)
}

fn read_result_cov(path: &Path) -> CliResult<(Pose6, Matrix6<f64>)> {
    let r = io::read_result(path)?;
    let cov = r
        .covariance()
        .ok_or_else(|| CliError::input(format!("{}: no posterior_cov (was calibrate run with --skip-mcmc?)", path.display())))?;
    Ok((r.pose(), cov))
}

fn cmd_map(ctx: &Ctx, data: &Path, result: &Path, out: &Path) -> CliResult<()> {
    let start = Instant::now();
    let dataset = io::read_dataset(data)?;
    let r = io::read_result(result)?;
    // without a posterior the extrinsics are treated as exact
    let cov = r.covariance().unwrap_or_else(Matrix6::zeros);
    let (fit, mapped) = pipeline::map_dataset(&dataset, &r.pose(), &cov)?;
    let mut o = Outputs::new(out);
    o.write("plane.json", &io::plane_json(&fit))?;
    o.write("projections.csv", &io::projections_csv(&mapped))?;
    o.write("spread.csv", &io::spread_csv(&pipeline::projection_spread(&mapped)))?;
    o.manifest("map", ctx, serde_json::json!({ "pose": r.pose }), &[data, result], start)
}

#[allow(clippy::too_many_arguments)]
fn cmd_basin(
    ctx: &Ctx,
    data: &Path,
    result: &Path,
    d_max: Option<f64>,
    phi_max_deg: Option<f64>,
    n_d: Option<usize>,
    n_phi: Option<usize>,
    success_threshold: Option<f64>,
    out: &Path,
) -> CliResult<()> {
    let start = Instant::now();
    let dataset = io::read_dataset(data)?;
    let (pose, cov) = read_result_cov(result)?;
    let mut b = ctx.config.basin.clone();
    b.d_max = d_max.unwrap_or(b.d_max);
    b.phi_max_deg = phi_max_deg.unwrap_or(b.phi_max_deg);
    b.n_d = n_d.unwrap_or(b.n_d);
    b.n_phi = n_phi.unwrap_or(b.n_phi);
    b.success_threshold = success_threshold.unwrap_or(b.success_threshold);
    let spec = BasinSpec { d_max: b.d_max, phi_max: b.phi_max_deg.to_radians(), n_d: b.n_d, n_phi: b.n_phi };
    let grid = pipeline::basin_of_attraction(
        &dataset,
        &pose,
        &cov,
        &spec,
        ctx.seed(),
        &ctx.config.powell,
        b.success_threshold,
        ctx.parallel(),
    )?;
    let mut o = Outputs::new(out);
    o.write("basin.csv", &io::basin_csv(&grid))?;
    let config = serde_json::json!({ "powell": json(&ctx.config.powell), "basin": json(&b) });
    o.manifest("basin", ctx, config, &[data, result], start)
}

#[derive(serde::Serialize)]
struct Converted {
    from: &'static str,
    to: &'static str,
    degrees: bool,
    pose: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cov: Option<Vec<f64>>,
}

fn repr_name(r: Repr) -> &'static str {
    match r {
        Repr::Euler => "euler",
        Repr::AxisAngle => "axis-angle",
    }
}

fn convert_pose(pose: &str, from: Repr, to: Repr, sigma: Option<&str>, degrees: bool) -> CliResult<String> {
    let v = parse_list(pose, "--pose")?;
    if v.len() != 3 && v.len() != 6 || v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::input("--pose needs 3 or 6 finite values"));
    }
    let off = v.len() - 3;
    let k = if degrees { 1f64.to_radians() } else { 1.0 };
    let ang = [v[off] * k, v[off + 1] * k, v[off + 2] * k];
    let sig = sigma.map(|s| parse_list(s, "--sigma")).transpose()?;
    if let Some(s) = &sig {
        if s.len() != v.len() {
            return Err(CliError::input(format!("--sigma needs {} values", v.len())));
        }
    }
    let (out_ang, q_ang) = match (from, to) {
        (Repr::Euler, Repr::AxisAngle) => {
            let e = EulerZYX::new(ang[0], ang[1], ang[2]);
            let a = rotation_to_axis_angle(&euler_to_rotation(e)?);
            let q = match &sig {
                Some(s) => {
                    let d: Vec<f64> = s[off..].iter().map(|x| (x * k) * (x * k)).collect();
                    Some(euler_cov_to_axis_angle_cov(e, &Matrix3::from_diagonal(&nalgebra::Vector3::from_vec(d)))?)
                }
                None => None,
            };
            ([a.0.x, a.0.y, a.0.z], q)
        }
        (Repr::AxisAngle, Repr::Euler) => {
            if sig.is_some() {
                return Err(CliError::input("--sigma is only supported for euler to axis-angle"));
            }
            let e = rotation_to_euler(&axis_angle_to_rotation(&AxisAngle::new(ang[0], ang[1], ang[2])));
            ([e.phi_x, e.phi_y, e.phi_z], None)
        }
        _ => {
            let q = sig.as_ref().map(|s| Matrix3::from_diagonal(&nalgebra::Vector3::from_fn(|i, _| (s[off + i] * k).powi(2))));
            (ang, q)
        }
    };
    let mut pose_out: Vec<f64> = v[..off].to_vec();
    pose_out.extend(out_ang.iter().map(|a| a / k));
    let (sigma_out, cov_out) = match q_ang {
        Some(q) => {
            let s = sig.as_ref().unwrap();
            let mut sd: Vec<f64> = s[..off].to_vec();
            sd.extend((0..3).map(|i| q[(i, i)].max(0.0).sqrt() / k));
            let cov: Vec<f64> = q.transpose().iter().map(|c| c / (k * k)).collect();
            (Some(sd), Some(cov))
        }
        None => (None, None),
    };
    let c = Converted { from: repr_name(from), to: repr_name(to), degrees, pose: pose_out, sigma: sigma_out, cov: cov_out };
    Ok(serde_json::to_string_pretty(&c).unwrap() + "\n")
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.threads == 0 {
        return Err(CliError::input("--threads must be at least 1"));
    }
    config.powell.validate().map_err(|e| CliError::input(format!("[powell] {e}")))?;
    let ctx = Ctx { seed: cli.seed, threads: cli.threads, config, config_path: cli.config.clone() };
    let run = || match &cli.command {
        Command::Synth { preset, out } => cmd_synth(&ctx, preset, out),
        Command::Calibrate { input, skip_mcmc, out } => cmd_calibrate(&ctx, input, *skip_mcmc, out),
        Command::Outliers { input, threshold, max_removals, out } => cmd_outliers(&ctx, input, *threshold, *max_removals, out),
        Command::Map { data, result, out } => cmd_map(&ctx, data, result, out),
        Command::Basin { data, result, d_max, phi_max_deg, n_d, n_phi, success_threshold, out } => {
            cmd_basin(&ctx, data, result, *d_max, *phi_max_deg, *n_d, *n_phi, *success_threshold, out)
        }
        Command::ConvertPose { pose, from, to, sigma, degrees, out } => {
            let text = convert_pose(pose, *from, *to, sigma.as_deref(), *degrees)?;
            print!("{text}");
            if let Some(p) = out {
                io::write_text(p, &text)?;
            }
            Ok(())
        }
    };
    if ctx.parallel() {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(ctx.threads)
            .build()
            .map_err(|e| CliError::input(format!("thread pool: {e}")))?;
        pool.install(run)
    } else {
        run()
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code; diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("linecal: {}", e.msg);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parsed(text: &str) -> serde_json::Value {
        serde_json::from_str(text).unwrap()
    }

    #[test]
    fn hand_measured_euler_to_axis_angle() {
        let out = convert_pose("0.2,0,-0.8,0,0,-90", Repr::Euler, Repr::AxisAngle, None, true).unwrap();
        let v = parsed(&out);
        let p: Vec<f64> = v["pose"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(&p[..3], &[0.2, 0.0, -0.8]);
        assert!((p[5] + 90.0).abs() < 1e-9 && p[3].abs() < 1e-9);
    }

    #[test]
    fn identity_round_trip() {
        let out = convert_pose("0,0,0", Repr::Euler, Repr::AxisAngle, None, false).unwrap();
        assert_eq!(parsed(&out)["pose"], serde_json::json!([0.0, 0.0, 0.0]));
        let back = convert_pose("0,0,0", Repr::AxisAngle, Repr::Euler, None, false).unwrap();
        assert_eq!(parsed(&back)["pose"], serde_json::json!([0.0, 0.0, 0.0]));
    }

    #[test]
    fn bad_pose_is_input_error() {
        assert_eq!(convert_pose("1,2", Repr::Euler, Repr::AxisAngle, None, false).unwrap_err().code, EXIT_INPUT);
        assert_eq!(convert_pose("a,b,c", Repr::Euler, Repr::AxisAngle, None, false).unwrap_err().code, EXIT_INPUT);
        assert_eq!(parse_pose("1,2,3").unwrap_err().code, EXIT_INPUT);
    }

    #[test]
    fn error_classification() {
        assert_eq!(CliError::from(Error::InvalidArgument("x".into())).code, EXIT_INPUT);
        assert_eq!(CliError::from(Error::RankDeficient).code, EXIT_NUMERICAL);
        assert_eq!(CliError::from(Error::DegenerateGeometry("x".into())).code, EXIT_NUMERICAL);
    }
}
