//! Empirical-likelihood approximate Bayesian computation.
//!
//! The likelihood of observed summary statistics is estimated by the
//! empirical likelihood of replicate summaries simulated from the model, and
//! plugged into a pseudo-marginal random-walk Metropolis sampler. Synthetic
//! likelihood and rejection ABC are provided as baselines.

pub mod el;
pub mod error;
pub mod experiments;
pub mod models;
pub mod pseudolik;
pub mod rng;
pub mod samplers;
pub mod summaries;

pub use error::{Error, Result};
