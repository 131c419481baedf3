//! Seamless multimodel temperature postprocessing.
//!
//! Per-lead homoscedastic Gaussian regression on a local model, a global
//! deterministic model and a global ensemble mean, extended with two persistence
//! predictors: the latest observation at the postprocessing init, and each
//! model's last available forecast once its horizon has passed. With both, every
//! lead uses the same predictor set, and the forecast has no skill jumps where a
//! model runs out.
//!
//! Modules, bottom up:
//! - [`datamodel`]: timestamps, lead-time grid, observation and forecast containers, CSV ingestion.
//! - [`assembly`]: design matrices for the persistence, reference and single-source modes.
//! - [`emos`]: closed-form maximum-likelihood fit, likelihood and prediction.
//! - [`verification`]: year-blocked cross-validation, MAE and skill scores.
//! - [`baselines`]: blending transitions and single-source runs for comparison.
//! - [`synthgen`]: seeded synthetic stations for reproducible experiments.
//! - [`cli`]: configuration, pipeline commands and SVG charts.

pub mod assembly;
pub mod baselines;
pub mod cli;
pub mod datamodel;
pub mod emos;
pub mod error;
pub mod synthgen;
pub mod verification;

pub use error::{Error, Result};
