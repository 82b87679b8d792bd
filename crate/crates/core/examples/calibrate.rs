//! Calibrates the camera pose from a rough hand measurement and reports the
//! posterior spread next to the true pose.
//!
//! cargo run --release --example calibrate

use linecal::geom::{pose_distance, Pose6};
use linecal::pipeline::calibrate;
use linecal::solve::{EnsembleConfig, PowellConfig};
use linecal::synth::{generate_scenario, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ScenarioConfig { seed: 3, ..ScenarioConfig::ladybird() };
    let (data, truth) = generate_scenario(&cfg)?;

    // hand-measured pose: a few centimetres and a few degrees out
    let hand = Pose6::from_params(&[0.2, -0.1, -0.75, -0.80, 0.76, -1.40]);
    let off = pose_distance(&hand, &truth.t_cb);
    println!("start is {:.3} m / {:.2}° from truth", off.d, off.phi.to_degrees());

    let mcmc = EnsembleConfig { n_walkers: 48, n_iterations: 60, burn_in: 60, ..EnsembleConfig::default() };
    let res = calibrate(&data, &hand, &PowellConfig::default(), Some(&mcmc))?;
    println!("NLL {:.2} -> {:.2} in {} evaluations", res.nll_start, res.nll, res.n_evals);

    let sigma = res.posterior_sigma().ok_or("optimiser did not converge")?;
    let names = ["x", "y", "z", "ex", "ey", "ez"];
    for i in 0..6 {
        println!(
            "{:>2}: {:+.4} ± {:.4}   truth {:+.4}",
            names[i],
            res.pose.params()[i],
            sigma[i],
            truth.t_cb.params()[i]
        );
    }
    let acc = res.samples.as_ref().map_or(0.0, |s| s.acceptance_rate);
    println!("acceptance rate {acc:.2}");
    Ok(())
}
