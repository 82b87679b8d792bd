//! Extrinsic calibration of a pushbroom line-scan camera against a platform
//! navigation solution.
//!
//! A known planar pattern is imaged from several platform poses. For a
//! candidate camera-to-body pose every pattern point is triangulated from
//! all of its pixel rays, reprojected into each observation, and scored by
//! the variance-weighted squared reprojection error. The pose minimising
//! that score is found with Powell's method, and its posterior covariance
//! with an affine-invariant ensemble sampler.

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod cli;
pub mod error;
pub mod geom;
pub mod io;
pub mod likelihood;
pub mod pipeline;
pub mod solve;
pub mod synth;
pub mod triangulate;
pub mod uncert;

pub use error::{Error, Result};
