//! Derivative-free minimisation and ensemble MCMC sampling.

mod ensemble;
mod powell;

pub use ensemble::{ensemble_sample, sample_covariance, EnsembleConfig, PosteriorSamples};
pub use powell::{powell_minimize, PowellConfig, PowellResult};
