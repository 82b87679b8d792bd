//! Corrupts two observations and lets iterative outlier rejection find them.
//!
//! cargo run --release --example outlier_rejection

use linecal::pipeline::{reject_outliers, DEFAULT_OUTLIER_THRESHOLD};
use linecal::solve::PowellConfig;
use linecal::synth::{corrupt_observation, generate_scenario, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ScenarioConfig { n_observations: 12, seed: 11, ..ScenarioConfig::ladybird() };
    let (data, truth) = generate_scenario(&cfg)?;
    let data = corrupt_observation(&data, 4, 25.0)?;
    let data = corrupt_observation(&data, 9, -12.0)?;

    let (kept, trace) = reject_outliers(&data, &truth.t_cb, DEFAULT_OUTLIER_THRESHOLD, usize::MAX, &PowellConfig::default())?;
    for (k, it) in trace.iterations.iter().enumerate() {
        let worst = it.mean_errors.iter().map(|(_, e)| *e).fold(0.0, f64::max);
        match it.removed_obs_id {
            Some(id) => println!("iteration {k}: worst mean error {worst:.2} px, removing observation {id}"),
            None => println!("iteration {k}: worst mean error {worst:.2} px, done"),
        }
    }
    println!("kept observations {:?}", kept.obs_ids());
    Ok(())
}
