//! Triangulates the pattern points from every observation pair at a given
//! camera pose and prints the reprojection errors.
//!
//! cargo run --release --example triangulation

use linecal::likelihood::Objective;
use linecal::synth::{generate_scenario, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (data, truth) = generate_scenario(&ScenarioConfig { n_observations: 6, seed: 2, ..ScenarioConfig::ladybird() })?;
    let ev = Objective::new(&data)?.evaluate(&truth.t_cb)?;

    println!("point  estimate [m]                 true [m]                  σ [mm]   pairs");
    for p in &ev.points {
        let t = truth.pattern_points[p.point_id as usize];
        let sd = p.sigma.diagonal().map(|v| v.sqrt() * 1e3);
        println!(
            "{:>5}  ({:+.3}, {:+.3}, {:+.3})  ({:+.3}, {:+.3}, {:+.3})  {:>5.1}  {:>5}",
            p.point_id, p.p_hat.x, p.p_hat.y, p.p_hat.z, t.x, t.y, t.z, sd.max(), p.n_pairs_used
        );
    }
    let worst = ev.records.iter().max_by(|a, b| a.e.total_cmp(&b.e)).ok_or("no records")?;
    println!(
        "largest reprojection error {:.2} px (σ {:.2} px) at obs {} point {}",
        worst.e,
        worst.var_e.sqrt(),
        worst.obs_id,
        worst.point_id
    );
    println!("NLL {:.2}", ev.nll);
    Ok(())
}
