//! Continuous black-box optimization with CMA-ES and MAP-CMA.
//!
//! The library implements three variants of covariance matrix adaptation over
//! an ask/tell interface — classic CMA-ES, the pure rank-mu update, and
//! MAP-CMA, which augments the mean update with a momentum term
//! `(c1/(r·c_mu))·σ·p_c` built from the evolution path. The momentum form is
//! the closed-form result of natural-gradient ascent on a posterior whose
//! prior (normal-inverse-Wishart, centered ahead of the mean along the
//! evolution path) is chosen so that its covariance contribution is exactly
//! the rank-one update; the [`igo`] module carries that machinery and the
//! generic prior-aware update it comes from.
//!
//! The [`harness`] module reproduces a benchmark protocol over six standard
//! test functions with seeded, parallel trials and SR/SP1 aggregation, and
//! the `mapcma` binary exposes it as `run` and `sweep` subcommands. The
//! `examples/` directory shows one runnable program per capability.
//!
//! ```
//! use mapcma::{ask, tell, SearchDistribution, StrategyParams, Variant};
//! use nalgebra::DVector;
//! use rand::SeedableRng;
//!
//! let params = StrategyParams::new(4, None, Variant::MapCma, Some(4.0))?;
//! let mut state = SearchDistribution::new(DVector::from_element(4, 2.0), 1.0);
//! let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
//! for _ in 0..120 {
//!     let mut pop = ask(&state, &params, &mut rng)?;
//!     pop.evaluate_with(|x| x.iter().map(|v| v * v).sum());
//!     state = tell(&state, &params, &pop)?;
//! }
//! assert!(state.mean.norm() < 1e-3);
//! # Ok::<(), mapcma::Error>(())
//! ```

pub mod cma;
pub mod config;
mod error;
pub mod harness;
pub mod igo;
pub mod linalg;
pub mod objectives;
pub mod report;

pub use cma::{ask, tell, Population, Radius, SearchDistribution, StrategyParams, Variant};
pub use error::{Error, Result};
pub use harness::{run_experiment, run_trial, ExperimentSummary, TrialConfig, TrialResult};
pub use objectives::{Function, Objective};
