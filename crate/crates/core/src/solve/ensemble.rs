//! Affine-invariant ensemble sampler with the stretch move.
//!
//! Walkers are split into two halves; each half is moved using the other as
//! the complementary ensemble. All random numbers for a half-step are drawn
//! before its proposals are scored, so the chain is identical whether the
//! log-likelihood calls run sequentially or on a thread pool.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::uncert::Covariance;

/// Log-likelihoods at or below this count as `−∞`.
const INVALID_LOG_LIKE: f64 = -1e17;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_walkers: usize,
    pub n_iterations: usize,
    pub burn_in: usize,
    pub stretch_a: f64,
    /// Per-parameter standard deviation of the initial walker scatter.
    pub init_scale: Vec<f64>,
    pub seed: u64,
    /// Score each half-step's proposals on the rayon pool.
    pub parallel: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_walkers: 250,
            n_iterations: 100,
            burn_in: 100,
            stretch_a: 2.0,
            init_scale: vec![1e-4, 1e-4, 1e-4, 1e-5, 1e-5, 1e-5],
            seed: 0,
            parallel: false,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !self.n_walkers.is_multiple_of(2) || self.n_walkers < 2 * dim {
            return Err(Error::InvalidArgument(format!(
                "need an even number of walkers ≥ {}, got {}",
                2 * dim,
                self.n_walkers
            )));
        }
        if !(self.stretch_a > 1.0) {
            return Err(Error::InvalidArgument("stretch parameter must exceed 1".into()));
        }
        if self.init_scale.len() != dim || self.init_scale.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "init_scale needs {dim} non-negative entries"
            )));
        }
        if self.n_iterations == 0 {
            return Err(Error::InvalidArgument("n_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    /// Iteration-major: all walkers of iteration 0, then iteration 1, ...
    pub samples: Vec<Vec<f64>>,
    pub log_likelihoods: Vec<f64>,
    /// Fraction of accepted proposals after burn-in.
    pub acceptance_rate: f64,
}

fn score<F>(log_like: &F, x: &[f64]) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let v = log_like(x);
    if v.is_nan() || v <= INVALID_LOG_LIKE {
        f64::NEG_INFINITY
    } else {
        v
    }
}

fn score_all<F>(log_like: &F, xs: &[Vec<f64>], parallel: bool) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if parallel {
        xs.par_iter().map(|x| score(log_like, x)).collect()
    } else {
        xs.iter().map(|x| score(log_like, x)).collect()
    }
}

/// Samples `log_like` around `x0`.
pub fn ensemble_sample<F>(log_like: F, x0: &[f64], cfg: &EnsembleConfig) -> Result<PosteriorSamples>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = x0.len();
    cfg.validate(dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut walkers: Vec<Vec<f64>> = (0..cfg.n_walkers)
        .map(|_| {
            x0.iter()
                .zip(&cfg.init_scale)
                .map(|(x, s)| x + s * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let mut lnp = score_all(&log_like, &walkers, cfg.parallel);
    if lnp.iter().all(|v| !v.is_finite()) {
        return Err(Error::InitializationFailure);
    }

    let half = cfg.n_walkers / 2;
    let a = cfg.stretch_a;
    let total = cfg.burn_in + cfg.n_iterations;
    let mut samples = Vec::with_capacity(cfg.n_walkers * cfg.n_iterations);
    let mut log_likelihoods = Vec::with_capacity(cfg.n_walkers * cfg.n_iterations);
    let (mut accepted, mut proposed) = (0usize, 0usize);

    for it in 0..total {
        for first in [true, false] {
            let (active, other) = if first { (0..half, half..cfg.n_walkers) } else { (half..cfg.n_walkers, 0..half) };
            let draws: Vec<(usize, f64, f64)> = active
                .clone()
                .map(|_| {
                    let j = rng.random_range(other.clone());
                    let u: f64 = rng.random();
                    let z = ((a - 1.0) * u + 1.0).powi(2) / a;
                    let r: f64 = rng.random();
                    (j, z, r)
                })
                .collect();
            let proposals: Vec<Vec<f64>> = active
                .clone()
                .zip(&draws)
                .map(|(k, (j, z, _))| {
                    walkers[*j].iter().zip(&walkers[k]).map(|(xj, xk)| xj + z * (xk - xj)).collect()
                })
                .collect();
            let new_lnp = score_all(&log_like, &proposals, cfg.parallel);
            for ((k, (_, z, r)), (y, ly)) in active.zip(&draws).zip(proposals.into_iter().zip(new_lnp)) {
                let log_q = (dim as f64 - 1.0) * z.ln() + ly - lnp[k];
                let accept = ly.is_finite() && (!lnp[k].is_finite() || r.ln() < log_q);
                if accept {
                    walkers[k] = y;
                    lnp[k] = ly;
                }
                if it >= cfg.burn_in {
                    proposed += 1;
                    accepted += accept as usize;
                }
            }
        }
        if it >= cfg.burn_in {
            samples.extend(walkers.iter().cloned());
            log_likelihoods.extend(lnp.iter().copied());
        }
    }
    Ok(PosteriorSamples {
        samples,
        log_likelihoods,
        acceptance_rate: accepted as f64 / proposed.max(1) as f64,
    })
}

/// Sample mean and `1/(r − 1)`-normalised covariance.
pub fn sample_covariance(samples: &PosteriorSamples) -> Result<(DVector<f64>, Covariance)> {
    let r = samples.samples.len();
    if r < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {r}")));
    }
    let dim = samples.samples[0].len();
    if samples.samples.iter().any(|s| s.len() != dim) {
        return Err(Error::InvalidArgument("samples differ in dimension".into()));
    }
    let mut mean = DVector::zeros(dim);
    for s in &samples.samples {
        mean += DVector::from_column_slice(s);
    }
    mean /= r as f64;
    let mut q = DMatrix::zeros(dim, dim);
    for s in &samples.samples {
        let d = DVector::from_column_slice(s) - &mean;
        q += &d * d.transpose();
    }
    q /= (r - 1) as f64;
    let q = (&q + q.transpose()) * 0.5;
    Ok((mean, Covariance::from_matrix_unchecked(q)))
}
