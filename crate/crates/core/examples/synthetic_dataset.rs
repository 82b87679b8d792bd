//! Generates a Ladybird-like calibration dataset and writes it as JSON.
//!
//! cargo run --release --example synthetic_dataset [-- OUT_DIR]

use std::path::PathBuf;

use linecal::io::{write_dataset, write_ground_truth};
use linecal::synth::{generate_scenario, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("linecal-synth"));
    std::fs::create_dir_all(&out)?;

    let cfg = ScenarioConfig { seed: 7, ..ScenarioConfig::ladybird() };
    let (data, truth) = generate_scenario(&cfg)?;

    println!("{} observations of {} pattern points", data.obs_ids().len(), truth.pattern_points.len());
    println!("f = {:.1} px, u0 = {:.1} px", data.intrinsics.f_px, data.intrinsics.u0);
    for o in data.observations.iter().take(3) {
        println!("obs {} point {}: u = {:.2} px", o.obs_id, o.point_id, o.u);
    }

    write_dataset(&out.join("dataset.json"), &data)?;
    write_ground_truth(&out.join("ground_truth.json"), &truth)?;
    println!("wrote {}", out.display());
    Ok(())
}
