mod common;

use linecal::solve::{ensemble_sample, sample_covariance, EnsembleConfig};
use nalgebra::{DMatrix, DVector, Matrix6};
use statrs::distribution::{ContinuousCDF, Normal};

#[test]
fn recovers_standard_normal_covariance() {
    for seed in 0..3 {
        let err = common::sampler_gaussian_error(seed);
        assert!(err < 0.10, "seed {seed}: relative error {err:.3}");
    }
}

#[test]
fn recovers_correlated_covariance() {
    let a = Matrix6::from_fn(|i, j| ((i * 7 + j * 3) % 5) as f64 * 0.1 + if i == j { 1.0 } else { 0.0 });
    let cov = a * a.transpose();
    let prec = cov.try_inverse().unwrap();
    let log_like = |x: &[f64]| {
        let v = nalgebra::Vector6::from_column_slice(x);
        -0.5 * (v.transpose() * prec * v)[0]
    };
    let cfg = EnsembleConfig { n_walkers: 250, n_iterations: 200, init_scale: vec![1.0; 6], seed: 3, ..Default::default() };
    let s = ensemble_sample(log_like, &[0.0; 6], &cfg).unwrap();
    let (mean, q) = sample_covariance(&s).unwrap();
    let reference = DMatrix::from_column_slice(6, 6, cov.as_slice());
    let err = common::rel_frobenius(q.matrix(), &reference);
    assert!(err < 0.10, "relative error {err:.3}");
    assert!(mean.norm() < 0.2 * cov.diagonal().max().sqrt());
}

#[test]
fn default_configuration_yields_25000_samples() {
    let cfg = EnsembleConfig::default();
    let s = ensemble_sample(|x: &[f64]| -0.5 * x.iter().map(|v| v * v * 1e8).sum::<f64>(), &[0.0; 6], &cfg).unwrap();
    assert_eq!(s.samples.len(), 25_000);
    assert_eq!(s.log_likelihoods.len(), s.samples.len());
}

/// One-dimensional stretch-move chains, thinned until successive draws are
/// effectively independent, must be indistinguishable from the target.
#[test]
fn one_dimensional_histogram_passes_kolmogorov_smirnov() {
    let (walkers, keep, thin) = (1000usize, 100usize, 25usize);
    let (mu, sigma) = (1.5, 0.7);
    let cfg = EnsembleConfig {
        n_walkers: walkers,
        n_iterations: keep * thin,
        burn_in: 200,
        init_scale: vec![1.0],
        seed: 8,
        ..Default::default()
    };
    let s = ensemble_sample(|x: &[f64]| -0.5 * ((x[0] - mu) / sigma).powi(2), &[mu], &cfg).unwrap();
    let mut xs: Vec<f64> = s
        .samples
        .chunks(walkers)
        .step_by(thin)
        .flat_map(|it| it.iter().map(|w| w[0]))
        .collect();
    assert_eq!(xs.len(), 100_000);
    xs.sort_by(f64::total_cmp);
    let target = Normal::new(mu, sigma).unwrap();
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let c = target.cdf(*x);
            (c - i as f64 / n).abs().max((i as f64 + 1.0) / n - c)
        })
        .fold(0.0, f64::max);
    // asymptotic critical value at α = 0.01
    let critical = 1.628 / n.sqrt();
    assert!(d < critical, "KS statistic {d:.5} ≥ {critical:.5}");
}

#[test]
fn sequential_runs_are_bit_identical() {
    let f = |x: &[f64]| -0.5 * x.iter().map(|v| v * v).sum::<f64>();
    let cfg = EnsembleConfig { n_walkers: 24, n_iterations: 50, burn_in: 10, init_scale: vec![0.5; 6], seed: 21, ..Default::default() };
    let a = ensemble_sample(f, &[0.0; 6], &cfg).unwrap();
    let b = ensemble_sample(f, &[0.0; 6], &cfg).unwrap();
    assert_eq!(a, b);
    let other = ensemble_sample(f, &[0.0; 6], &EnsembleConfig { seed: 22, ..cfg }).unwrap();
    assert_ne!(a.samples, other.samples);
}

#[test]
fn covariance_is_symmetric_psd() {
    let f = |x: &[f64]| -0.5 * x.iter().enumerate().map(|(i, v)| v * v * (i + 1) as f64).sum::<f64>();
    let cfg = EnsembleConfig { n_walkers: 40, n_iterations: 100, init_scale: vec![0.3; 6], seed: 5, ..Default::default() };
    let s = ensemble_sample(f, &[0.0; 6], &cfg).unwrap();
    assert!(s.acceptance_rate > 0.0 && s.acceptance_rate < 1.0);
    let (_, q) = sample_covariance(&s).unwrap();
    let m = q.matrix();
    assert!((m - m.transpose()).abs().max() <= 1e-12);
    assert!(m.clone().symmetric_eigenvalues().iter().all(|l| *l >= -1e-12));
}

#[test]
fn mean_tracks_offset_target() {
    let c = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.0]);
    let cc = c.clone();
    let cfg = EnsembleConfig { n_walkers: 60, n_iterations: 300, init_scale: vec![1.0; 6], seed: 9, ..Default::default() };
    let s = ensemble_sample(move |x: &[f64]| -0.5 * (DVector::from_column_slice(x) - &cc).norm_squared(), c.as_slice(), &cfg).unwrap();
    let (mean, _) = sample_covariance(&s).unwrap();
    assert!((mean - c).abs().max() < 0.15);
}
