//! Ask/tell optimizer over a multivariate normal search distribution.
//!
//! Three update variants share one state and one code path:
//!
//! * [`Variant::CmaEs`] — mean update, both evolution paths, rank-one plus
//!   rank-mu covariance update, and cumulative step-size adaptation.
//! * [`Variant::PureRankMu`] — as above with the rank-one term disabled
//!   (`c1 = 0`).
//! * [`Variant::MapCma`] — CMA-ES plus the momentum mean term
//!   `(c1/(r·c_mu))·sigma·p_c`, the closed form of the posterior-ascent
//!   update under the evolution-path prior (see [`crate::igo`]). As `r` grows
//!   the momentum vanishes and the variant converges to plain CMA-ES.
//!
//! A [`SearchDistribution`] is single-writer: `ask`/`tell` never lock, and a
//! state value may move between threads but must not be shared mutably.
//! Distinct optimizer instances can run on distinct threads freely.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::igo::UtilityWeights;
use crate::linalg::SymMatrix;

/// Update-rule selector. The canonical config strings are
/// `"cma-es"`, `"pure-rank-mu"` and `"map-cma"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    CmaEs,
    PureRankMu,
    MapCma,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::CmaEs => "cma-es",
            Variant::PureRankMu => "pure-rank-mu",
            Variant::MapCma => "map-cma",
        }
    }

    pub fn needs_radius(self) -> bool {
        matches!(self, Variant::MapCma)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cma-es" => Ok(Variant::CmaEs),
            "pure-rank-mu" => Ok(Variant::PureRankMu),
            "map-cma" => Ok(Variant::MapCma),
            other => Err(Error::InvalidConfig(format!("unknown variant \"{other}\""))),
        }
    }
}

/// Momentum radius setting: a literal value or one of the symbolic
/// forms `"sqrt-n"` and `"n"` resolved against the search dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Radius {
    Literal(f64),
    SqrtDim,
    Dim,
}

impl Radius {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            Radius::Literal(v) => v,
            Radius::SqrtDim => (n as f64).sqrt(),
            Radius::Dim => n as f64,
        }
    }
}

impl fmt::Display for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Radius::Literal(v) => write!(f, "{v}"),
            Radius::SqrtDim => f.write_str("sqrt-n"),
            Radius::Dim => f.write_str("n"),
        }
    }
}

impl FromStr for Radius {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt-n" => Ok(Radius::SqrtDim),
            "n" => Ok(Radius::Dim),
            other => {
                let v: f64 = other.parse().map_err(|_| {
                    Error::InvalidConfig(format!(
                        "r must be a positive number, \"sqrt-n\" or \"n\"; got \"{other}\""
                    ))
                })?;
                if v > 0.0 && v.is_finite() {
                    Ok(Radius::Literal(v))
                } else {
                    Err(Error::InvalidConfig(format!("r must be positive, got {v}")))
                }
            }
        }
    }
}

/// Fixed strategy constants for one optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyParams {
    pub n: usize,
    pub lambda: usize,
    pub weights: UtilityWeights,
    pub mu_eff: f64,
    pub c_m: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c1: f64,
    pub c_mu: f64,
    /// Approximation of E‖N(0, I)‖: `√N·(1 - 1/(4N) + 1/(21N²))`.
    pub chi_n: f64,
    pub variant: Variant,
    /// Momentum radius; present exactly when `variant` is [`Variant::MapCma`].
    pub r: Option<f64>,
    /// Gate the `p_c` update behind the stall indicator `h_sigma`. Off by
    /// default; opt in for the classic safeguarded rank-one accumulation.
    pub use_h_sigma: bool,
}

impl StrategyParams {
    /// Default constants for dimension `n`.
    ///
    /// `lambda` defaults to `4 + floor(3·ln N)`; the learning rates follow the
    /// usual CMA-ES defaults, and `c_m` is `1` except for [`Variant::MapCma`]
    /// where `c_m = 1/(1 + c1/(c_mu·r))` so that the two mean-update
    /// coefficients sum to one.
    pub fn new(
        n: usize,
        lambda: Option<usize>,
        variant: Variant,
        r: Option<f64>,
    ) -> Result<StrategyParams> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!(
                "dimension must be >= 2, got {n}"
            )));
        }
        let nf = n as f64;
        let lambda = lambda.unwrap_or(4 + (3.0 * nf.ln()).floor() as usize);
        if lambda < 2 {
            return Err(Error::InvalidConfig(format!(
                "population size must be >= 2, got {lambda}"
            )));
        }
        let r = match (variant, r) {
            (Variant::MapCma, Some(r)) if r > 0.0 && r.is_finite() => Some(r),
            (Variant::MapCma, Some(r)) => {
                return Err(Error::InvalidConfig(format!("r must be positive, got {r}")))
            }
            (Variant::MapCma, None) => {
                return Err(Error::InvalidConfig("map-cma requires r".into()))
            }
            (_, None) => None,
            (v, Some(_)) => {
                return Err(Error::InvalidConfig(format!("variant {v} does not take r")))
            }
        };

        let weights = UtilityWeights::log_rank(lambda);
        let mu_eff = weights.mu_eff();
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c1 = 2.0 / ((nf + 1.3) * (nf + 1.3) + mu_eff);
        // Floored so the rate stays positive for two- and three-member
        // populations, where mu_eff = 1 zeroes the numerator.
        let c_mu = (1.0 - c1)
            .min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0) * (nf + 2.0) + mu_eff))
            .max(1e-8);
        let c_m = match (variant, r) {
            (Variant::MapCma, Some(r)) => 1.0 / (1.0 + c1 / (c_mu * r)),
            _ => 1.0,
        };
        let c1 = if variant == Variant::PureRankMu {
            0.0
        } else {
            c1
        };
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

        let params = StrategyParams {
            n,
            lambda,
            weights,
            mu_eff,
            c_m,
            c_sigma,
            d_sigma,
            c_c,
            c1,
            c_mu,
            chi_n,
            variant,
            r,
            use_h_sigma: false,
        };
        debug_assert!(params.c_sigma > 0.0 && params.c_sigma <= 1.0);
        debug_assert!(params.c_c > 0.0 && params.c_c <= 1.0);
        debug_assert!(params.c1 >= 0.0 && params.c_mu > 0.0);
        debug_assert!(params.c1 + params.c_mu <= 1.0);
        Ok(params)
    }

    pub fn with_h_sigma(mut self, on: bool) -> Self {
        self.use_h_sigma = on;
        self
    }
}

/// Full optimizer state: the sampling distribution N(m, σ²C) plus both
/// evolution paths and the iteration counter.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchDistribution {
    pub mean: DVector<f64>,
    pub sigma: f64,
    pub cov: SymMatrix,
    pub p_sigma: DVector<f64>,
    pub p_c: DVector<f64>,
    pub t: u64,
}

impl SearchDistribution {
    /// Fresh state with identity covariance and zero paths.
    pub fn new(mean: DVector<f64>, sigma: f64) -> Self {
        assert!(sigma > 0.0, "sigma must be positive");
        let n = mean.len();
        Self {
            mean,
            sigma,
            cov: SymMatrix::identity(n),
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            t: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// One generation member: the raw draw `y ~ N(0, C)`, the candidate
/// `x = m + σ·y`, its objective value, and its original sample index.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub y: DVector<f64>,
    pub x: DVector<f64>,
    pub value: f64,
    pub index: usize,
}

/// A generation of λ candidates. Produced unevaluated by [`ask`]; objective
/// values must be filled in before [`tell`].
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    candidates: Vec<Candidate>,
}

impl Population {
    /// Builds a population directly. Normal use goes through [`ask`]; this is
    /// for synthetic flows such as replaying recorded samples, where the
    /// caller guarantees `x = m + σ·y` for the state later given to [`tell`].
    pub fn from_candidates(candidates: Vec<Candidate>) -> Self {
        Self { candidates }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn is_evaluated(&self) -> bool {
        self.candidates.iter().all(|c| !c.value.is_nan())
    }

    /// Assigns objective values by position.
    pub fn set_values(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.candidates.len() {
            return Err(Error::DimensionMismatch {
                expected: self.candidates.len(),
                got: values.len(),
            });
        }
        for (c, &v) in self.candidates.iter_mut().zip(values) {
            c.value = v;
        }
        Ok(())
    }

    /// Evaluates every candidate in place.
    pub fn evaluate_with(&mut self, mut f: impl FnMut(&[f64]) -> f64) {
        for c in &mut self.candidates {
            c.value = f(c.x.as_slice());
        }
    }

    /// Candidate indices sorted by ascending objective value, ties broken by
    /// original sample index (the sort is stable).
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.candidates.len()).collect();
        idx.sort_by(|&a, &b| {
            self.candidates[a]
                .value
                .total_cmp(&self.candidates[b].value)
        });
        idx
    }

    pub fn best(&self) -> &Candidate {
        let order = self.ranking();
        &self.candidates[order[0]]
    }
}

/// Samples λ candidates `y_i ~ N(0, C)`, `x_i = m + σ·y_i`.
///
/// Fails with [`Error::CovarianceCollapse`] when the covariance no longer
/// admits a Cholesky factor.
pub fn ask<R: Rng + ?Sized>(
    state: &SearchDistribution,
    params: &StrategyParams,
    rng: &mut R,
) -> Result<Population> {
    let n = state.dim();
    let chol = state
        .cov
        .cholesky()
        .map_err(|_| Error::CovarianceCollapse)?;
    let candidates = (0..params.lambda)
        .map(|index| {
            let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let y = &chol * z;
            let x = &state.mean + state.sigma * &y;
            Candidate {
                y,
                x,
                value: f64::NAN,
                index,
            }
        })
        .collect();
    Ok(Population { candidates })
}

/// Consumes an evaluated population and produces the successor state.
///
/// Update order: rank, `p_sigma`, (`h_sigma`,) `p_c`, mean, covariance,
/// step-size. The momentum mean term of [`Variant::MapCma`] uses the already
/// updated path `p_c`. The new covariance is symmetrized and verified
/// positive definite; a failed check surfaces as
/// [`Error::CovarianceCollapse`] rather than a silently invalid state.
pub fn tell(
    state: &SearchDistribution,
    params: &StrategyParams,
    pop: &Population,
) -> Result<SearchDistribution> {
    let n = state.dim();
    assert_eq!(n, params.n, "state/params dimension mismatch");
    assert_eq!(pop.len(), params.lambda, "population size mismatch");
    assert!(pop.is_evaluated(), "tell requires an evaluated population");

    let order = pop.ranking();
    let w = &params.weights;

    // Weighted recombination of the top-mu raw draws.
    let mut wy = DVector::zeros(n);
    for (rank, &i) in order.iter().enumerate().take(w.mu()) {
        wy += w.get(rank) * &pop.candidates[i].y;
    }

    let (inv_sqrt, _clamped) = state.cov.inv_sqrt(state.cov.default_eig_floor());
    let cs = params.c_sigma;
    let p_sigma_next = (1.0 - cs) * &state.p_sigma
        + (cs * (2.0 - cs) * params.mu_eff).sqrt() * inv_sqrt.mul_vec(&wy);
    let p_sigma_norm = p_sigma_next.norm();

    let h_sigma = if params.use_h_sigma {
        let decay = 1.0 - (1.0 - cs).powi(2 * (state.t as i32 + 1));
        let threshold = decay.sqrt() * (1.4 + 2.0 / (n as f64 + 1.0)) * params.chi_n;
        p_sigma_norm < threshold
    } else {
        true
    };
    let h = if h_sigma { 1.0 } else { 0.0 };

    let cc = params.c_c;
    let p_c_next = (1.0 - cc) * &state.p_c + h * (cc * (2.0 - cc) * params.mu_eff).sqrt() * &wy;

    // Mean update from the candidates themselves; MAP-CMA adds the momentum
    // term built from the updated path.
    let mut shift = DVector::zeros(n);
    for (rank, &i) in order.iter().enumerate().take(w.mu()) {
        shift += w.get(rank) * (&pop.candidates[i].x - &state.mean);
    }
    let mean_next = match params.variant {
        Variant::CmaEs | Variant::PureRankMu => &state.mean + params.c_m * shift,
        Variant::MapCma => {
            let r = params.r.expect("map-cma carries r");
            let momentum = (params.c1 / (r * params.c_mu)) * state.sigma * &p_c_next;
            &state.mean + params.c_m * (shift + momentum)
        }
    };

    let mut rank_mu = DMatrix::zeros(n, n);
    for (rank, &i) in order.iter().enumerate().take(w.mu()) {
        let y = &pop.candidates[i].y;
        rank_mu += w.get(rank) * y * y.transpose();
    }
    let mut cov_next_raw = state.cov.as_matrix() + params.c_mu * (rank_mu - state.cov.as_matrix());
    if params.c1 > 0.0 {
        let rank_one = &p_c_next * p_c_next.transpose() - state.cov.as_matrix();
        cov_next_raw += params.c1 * rank_one;
        if params.use_h_sigma && !h_sigma {
            // Compensates the stalled rank-one accumulation so the decay of C
            // stays calibrated.
            cov_next_raw += params.c1 * cc * (2.0 - cc) * state.cov.as_matrix();
        }
    }
    let cov_next = SymMatrix::from_matrix(&cov_next_raw)?;
    if cov_next.min_eigenvalue() <= 0.0 {
        return Err(Error::CovarianceCollapse);
    }

    let sigma_next =
        state.sigma * ((cs / params.d_sigma) * (p_sigma_norm / params.chi_n - 1.0)).exp();

    Ok(SearchDistribution {
        mean: mean_next,
        sigma: sigma_next,
        cov: cov_next,
        p_sigma: p_sigma_next,
        p_c: p_c_next,
        t: state.t + 1,
    })
}
