//! Sweeps start poses over translation and rotation offsets and reports
//! which ones converge back to the reference solution.
//!
//! cargo run --release --example basin_of_attraction

use linecal::pipeline::{basin_of_attraction, BasinSpec, DEFAULT_BASIN_THRESHOLD};
use linecal::solve::PowellConfig;
use linecal::synth::{generate_scenario, ScenarioConfig};
use nalgebra::Matrix6;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ScenarioConfig { n_observations: 10, noise_scale: 0.0, ..ScenarioConfig::ladybird() };
    let (data, truth) = generate_scenario(&cfg)?;
    // a stand-in covariance: 1 cm and about half a degree
    let q = Matrix6::from_diagonal_element(1e-4);

    let spec = BasinSpec { d_max: 0.5, phi_max: 20f64.to_radians(), n_d: 3, n_phi: 3 };
    let pcfg = PowellConfig { tolx: 1e-8, ftol: 1e-12, ..PowellConfig::default() };
    let grid = basin_of_attraction(&data, &truth.t_cb, &q, &spec, 0, &pcfg, DEFAULT_BASIN_THRESHOLD, false)?;

    println!("   d [m]  phi [°]  Mahalanobis  ok");
    for c in &grid.cells {
        println!("{:>8.2} {:>8.1} {:>12.2e}  {}", c.d, c.phi.to_degrees(), c.mahalanobis, if c.success { "yes" } else { "no" });
    }
    Ok(())
}
