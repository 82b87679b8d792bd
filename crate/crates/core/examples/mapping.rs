//! Projects every observation onto the fitted pattern plane, once with the
//! calibrated pose and once with a pose that is one degree off.
//!
//! cargo run --release --example mapping

use linecal::pipeline::{calibrate, map_dataset, projection_spread};
use linecal::solve::{EnsembleConfig, PowellConfig};
use linecal::synth::{generate_scenario, perturb_pose, ScenarioConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (data, truth) = generate_scenario(&ScenarioConfig { seed: 5, ..ScenarioConfig::ladybird() })?;
    let mcmc = EnsembleConfig { n_walkers: 48, n_iterations: 60, burn_in: 60, ..EnsembleConfig::default() };
    let cal = calibrate(&data, &truth.t_cb, &PowellConfig::default(), Some(&mcmc))?;
    let q = cal.posterior_cov.ok_or("no posterior")?;

    let (fit, mapped) = map_dataset(&data, &cal.pose, &q)?;
    let p = fit.plane;
    println!("plane {:.4}x + {:.4}y + {:.4}z + {:.4} = 0, rms {:.4} m", p.a, p.b, p.c, p.d, fit.rms_residual);

    let off = perturb_pose(&cal.pose, 0.0, 1f64.to_radians(), &mut ChaCha8Rng::seed_from_u64(1));
    let (_, mapped_off) = map_dataset(&data, &off, &q)?;
    let (good, bad) = (projection_spread(&mapped), projection_spread(&mapped_off));
    println!("point  spread(calibrated)  spread(1° off)");
    for (id, s) in &good {
        println!("{id:>5}  {:>17.4}  {:>14.4}", s, bad[id]);
    }

    let m = &mapped[0];
    let sd = m.cov.diagonal().map(f64::sqrt);
    println!("obs {} point {}: σ = ({:.4}, {:.4}, {:.4}) m", m.obs_id, m.point_id, sd.x, sd.y, sd.z);
    Ok(())
}
