//! Experiment runner: seeded trials, the termination protocol, and SR/SP1
//! aggregation.
//!
//! A trial initializes the mean uniformly from the objective's init box,
//! sets `sigma = (b - a)/2` and `C = I`, then loops ask → evaluate → target
//! check → tell → eigenvalue/budget check. Evaluations are counted in whole
//! generations: when the target is hit mid-generation, all λ evaluations of
//! that generation are charged.
//!
//! Trials are independent; [`run_experiment`] runs them on a work pool of
//! configurable width, each with its own rng stream derived from the base
//! seed, and aggregates order-insensitively, so the summary does not depend
//! on the parallelism level.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::cma::{ask, tell, SearchDistribution, StrategyParams, Variant};
use crate::error::{Error, Result};
use crate::objectives::{EvalBudget, Objective};

/// Everything a single trial needs. Build with [`TrialConfig::new`] and the
/// `with_*` overrides; construction validates the strategy parameters once so
/// trial execution itself cannot fail on configuration.
#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub objective: Objective,
    pub params: StrategyParams,
    /// Success threshold on the best objective value (default `1e-10`).
    pub target_f: f64,
    /// Evaluation budget (default `10^6 · N`).
    pub max_evals: u64,
    /// Failure threshold on the minimum eigenvalue of σ²C (default `1e-30`).
    pub min_eig_threshold: f64,
    pub seed: u64,
    /// Record a `(evaluations, best_f)` series: every generation for N ≤ 20,
    /// every 5th beyond, plus the terminal generation.
    pub record_trace: bool,
}

impl TrialConfig {
    pub fn new(objective: Objective, variant: Variant, r: Option<f64>) -> Result<TrialConfig> {
        let params = StrategyParams::new(objective.dim(), None, variant, r)?;
        Ok(TrialConfig {
            objective,
            params,
            target_f: 1e-10,
            max_evals: 1_000_000 * objective.dim() as u64,
            min_eig_threshold: 1e-30,
            seed: 0,
            record_trace: false,
        })
    }

    /// Overrides the population size (rebuilds the dependent constants).
    pub fn with_lambda(mut self, lambda: usize) -> Result<TrialConfig> {
        let use_h_sigma = self.params.use_h_sigma;
        self.params = StrategyParams::new(
            self.objective.dim(),
            Some(lambda),
            self.params.variant,
            self.params.r,
        )?
        .with_h_sigma(use_h_sigma);
        Ok(self)
    }

    pub fn with_h_sigma(mut self, on: bool) -> TrialConfig {
        self.params = self.params.with_h_sigma(on);
        self
    }

    pub fn with_target(mut self, target_f: f64) -> Result<TrialConfig> {
        if target_f <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "target must be positive, got {target_f}"
            )));
        }
        self.target_f = target_f;
        Ok(self)
    }

    pub fn with_max_evals(mut self, max_evals: u64) -> Result<TrialConfig> {
        if max_evals < self.params.lambda as u64 {
            return Err(Error::InvalidConfig(format!(
                "budget {max_evals} is below one generation (lambda = {})",
                self.params.lambda
            )));
        }
        self.max_evals = max_evals;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> TrialConfig {
        self.seed = seed;
        self
    }

    pub fn with_trace(mut self, on: bool) -> TrialConfig {
        self.record_trace = on;
        self
    }
}

/// Why a trial stopped. Success is exactly [`TerminationReason::TargetReached`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    TargetReached,
    BudgetExhausted,
    EigenvalueCollapse,
    CovarianceCollapse,
}

impl TerminationReason {
    pub fn name(self) -> &'static str {
        match self {
            TerminationReason::TargetReached => "target-reached",
            TerminationReason::BudgetExhausted => "budget-exhausted",
            TerminationReason::EigenvalueCollapse => "eigenvalue-collapse",
            TerminationReason::CovarianceCollapse => "covariance-collapse",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub success: bool,
    pub evaluations: u64,
    /// Best value seen over all evaluated candidates (best-so-far, not the
    /// final generation's best).
    pub best_f: f64,
    pub reason: TerminationReason,
    pub trace: Option<Vec<(u64, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub n_trials: usize,
    pub success_rate: f64,
    /// Mean evaluations of successful trials divided by the success rate;
    /// `None` when nothing succeeded (reported as "-" in tables).
    pub sp1: Option<f64>,
    pub mean_success_evals: Option<f64>,
    pub trials: Vec<TrialResult>,
}

/// Runs one seeded trial to termination.
pub fn run_trial(cfg: &TrialConfig) -> TrialResult {
    let n = cfg.objective.dim();
    let lambda = cfg.params.lambda as u64;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);

    let (a, b) = cfg.objective.init_box();
    let mean0 = DVector::from_fn(n, |_, _| rng.random_range(a..b));
    let mut state = SearchDistribution::new(mean0, (b - a) / 2.0);

    let mut budget = EvalBudget::new(cfg.max_evals);
    let mut best = f64::INFINITY;
    let trace_stride: u64 = if n <= 20 { 1 } else { 5 };
    let mut trace: Option<Vec<(u64, f64)>> = cfg.record_trace.then(Vec::new);
    let mut generation: u64 = 0;

    let finish =
        |success, budget: &EvalBudget, best, reason, mut trace: Option<Vec<(u64, f64)>>| {
            if let Some(t) = trace.as_mut() {
                if t.last().map(|&(e, _)| e) != Some(budget.used()) {
                    t.push((budget.used(), best));
                }
            }
            TrialResult {
                success,
                evaluations: budget.used(),
                best_f: best,
                reason,
                trace,
            }
        };

    loop {
        let mut pop = match ask(&state, &cfg.params, &mut rng) {
            Ok(p) => p,
            Err(_) => {
                return finish(
                    false,
                    &budget,
                    best,
                    TerminationReason::CovarianceCollapse,
                    trace,
                )
            }
        };
        pop.evaluate_with(|x| {
            cfg.objective
                .evaluate(x)
                .expect("candidate dimension matches the objective")
        });
        budget.charge(lambda);
        generation += 1;
        best = best.min(pop.best().value);
        if let Some(t) = trace.as_mut() {
            if generation.is_multiple_of(trace_stride) {
                t.push((budget.used(), best));
            }
        }

        if best < cfg.target_f {
            return finish(true, &budget, best, TerminationReason::TargetReached, trace);
        }
        state = match tell(&state, &cfg.params, &pop) {
            Ok(s) => s,
            Err(_) => {
                return finish(
                    false,
                    &budget,
                    best,
                    TerminationReason::CovarianceCollapse,
                    trace,
                )
            }
        };
        if state.sigma * state.sigma * state.cov.min_eigenvalue() < cfg.min_eig_threshold {
            return finish(
                false,
                &budget,
                best,
                TerminationReason::EigenvalueCollapse,
                trace,
            );
        }
        if budget.exhausted() {
            return finish(
                false,
                &budget,
                best,
                TerminationReason::BudgetExhausted,
                trace,
            );
        }
    }
}

/// Derives the seed of trial `index` from `base` with a splitmix64-style
/// mix, so trials are independent of execution order and pool width.
pub fn split_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `n_trials` independent seeded trials and aggregates them.
///
/// `parallelism = 0` uses the default pool width. The summary is a pure
/// function of `(cfg, n_trials, base_seed)`.
pub fn run_experiment(
    cfg: &TrialConfig,
    n_trials: usize,
    base_seed: u64,
    parallelism: usize,
) -> ExperimentSummary {
    assert!(n_trials >= 1, "need at least one trial");
    let run_all = || {
        (0..n_trials)
            .into_par_iter()
            .map(|i| {
                let trial_cfg = cfg.clone().with_seed(split_seed(base_seed, i as u64));
                run_trial(&trial_cfg)
            })
            .collect::<Vec<_>>()
    };
    let trials = if parallelism == 0 {
        run_all()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .expect("thread pool")
            .install(run_all)
    };
    summarize(trials)
}

/// Aggregates per-trial results into SR and SP1.
pub fn summarize(trials: Vec<TrialResult>) -> ExperimentSummary {
    let n_trials = trials.len();
    let successes: Vec<&TrialResult> = trials.iter().filter(|t| t.success).collect();
    let success_rate = successes.len() as f64 / n_trials as f64;
    let mean_success_evals = (!successes.is_empty()).then(|| {
        successes.iter().map(|t| t.evaluations as f64).sum::<f64>() / successes.len() as f64
    });
    let sp1 = mean_success_evals.map(|m| m / success_rate);
    ExperimentSummary {
        n_trials,
        success_rate,
        sp1,
        mean_success_evals,
        trials,
    }
}

/// SP1 of a result list: mean evaluations of successful trials divided by the
/// success rate; `None` when no trial succeeded.
pub fn sp1(trials: &[TrialResult]) -> Option<f64> {
    assert!(!trials.is_empty(), "sp1 of an empty result list");
    let successes: Vec<u64> = trials
        .iter()
        .filter(|t| t.success)
        .map(|t| t.evaluations)
        .collect();
    if successes.is_empty() {
        return None;
    }
    let mean = successes.iter().sum::<u64>() as f64 / successes.len() as f64;
    let rate = successes.len() as f64 / trials.len() as f64;
    Some(mean / rate)
}
