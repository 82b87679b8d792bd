//! Draws from a correlated 2-D Gaussian with the stretch-move ensemble
//! sampler and compares the sample covariance with the target.
//!
//! cargo run --release --example ensemble_sampler

use linecal::solve::{ensemble_sample, sample_covariance, EnsembleConfig};
use nalgebra::{Matrix2, Vector2};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cov = Matrix2::new(1.0, 0.8, 0.8, 2.0);
    let prec = cov.try_inverse().ok_or("singular")?;
    let log_like = |x: &[f64]| {
        let v = Vector2::new(x[0] - 1.0, x[1] + 2.0);
        -0.5 * v.dot(&(prec * v))
    };

    let cfg = EnsembleConfig {
        n_walkers: 64,
        n_iterations: 2000,
        burn_in: 500,
        init_scale: vec![1.0, 1.0],
        ..EnsembleConfig::default()
    };
    let s = ensemble_sample(log_like, &[1.0, -2.0], &cfg)?;
    let (mean, est) = sample_covariance(&s)?;
    let est = est.matrix();
    println!("{} samples, acceptance {:.2}", s.samples.len(), s.acceptance_rate);
    println!("mean ({:.3}, {:.3}), target (1, -2)", mean[0], mean[1]);
    println!("cov [[{:.3}, {:.3}], [{:.3}, {:.3}]]", est[(0, 0)], est[(0, 1)], est[(1, 0)], est[(1, 1)]);
    println!("target [[1, 0.8], [0.8, 2]]");
    Ok(())
}
