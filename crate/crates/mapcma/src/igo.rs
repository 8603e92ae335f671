//! Natural-gradient machinery for search distributions over R^N.
//!
//! This module owns the math that turns ranked samples and a
//! normal-inverse-Wishart prior into a parameter update for a multivariate
//! normal: utility weights, the log-likelihood natural gradient, the prior's
//! vanilla and natural gradients, the inverse-Fisher map between them, and
//! the combined posterior-ascent step ([`map_igo_update`]). The evolution-path
//! prior ([`NiwPrior::rank_one`]) is what connects this update to the rank-one
//! covariance term and the momentum mean term used by the `cma` module.
//!
//! Gradients are kept in (vector, symmetric matrix) block form rather than a
//! flattened layout, so off-diagonal degrees of freedom are never duplicated.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Rank-indexed recombination weights: non-increasing, positive for the first
/// `mu` ranks, zero afterwards, summing to one over the positive part.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityWeights {
    w: Vec<f64>,
    mu: usize,
}

impl UtilityWeights {
    /// The standard log-rank scheme: `mu = floor(lambda/2)` and raw weights
    /// `ln((lambda+1)/2) - ln(i)` for the best `mu` ranks, normalized to sum
    /// to one.
    pub fn log_rank(lambda: usize) -> Self {
        assert!(lambda >= 2, "population size must be >= 2");
        let mu = lambda / 2;
        let log_half = ((lambda as f64 + 1.0) / 2.0).ln();
        let mut w: Vec<f64> = (0..lambda)
            .map(|i| {
                if i < mu {
                    log_half - ((i + 1) as f64).ln()
                } else {
                    0.0
                }
            })
            .collect();
        let sum: f64 = w[..mu].iter().sum();
        for v in &mut w[..mu] {
            *v /= sum;
        }
        Self { w, mu }
    }

    /// Accepts a custom scheme, validating the rank-weight contract.
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.len() < 2 {
            return Err(Error::InvalidConfig("need at least two weights".into()));
        }
        let mu = w.iter().take_while(|&&v| v > 0.0).count();
        if mu == 0 {
            return Err(Error::InvalidConfig("first weight must be positive".into()));
        }
        if w[mu..].iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidConfig(
                "weights after the positive prefix must be exactly zero".into(),
            ));
        }
        if w.windows(2).any(|p| p[0] < p[1]) {
            return Err(Error::InvalidConfig(
                "weights must be non-increasing".into(),
            ));
        }
        let sum: f64 = w[..mu].iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "positive weights must sum to 1, got {sum}"
            )));
        }
        Ok(Self { w, mu })
    }

    pub fn lambda(&self) -> usize {
        self.w.len()
    }

    /// Number of strictly positive weights.
    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn get(&self, rank: usize) -> f64 {
        self.w[rank]
    }

    /// Variance-effective selection mass `1 / Σ w_i²`.
    pub fn mu_eff(&self) -> f64 {
        1.0 / self.w.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Parameters of the search distribution N(m, C).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalParams {
    pub mean: DVector<f64>,
    pub cov: SymMatrix,
}

impl NormalParams {
    pub fn new(mean: DVector<f64>, cov: SymMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch {
                expected: cov.dim(),
                got: mean.len(),
            });
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Normal-inverse-Wishart prior over (mean, covariance):
/// `N(m | delta, C/gamma) · W⁻¹(C | psi, nu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NiwPrior {
    pub delta: DVector<f64>,
    pub gamma: f64,
    pub psi: SymMatrix,
    pub nu: f64,
}

impl NiwPrior {
    pub fn new(delta: DVector<f64>, gamma: f64, psi: SymMatrix, nu: f64) -> Result<Self> {
        let n = psi.dim();
        if delta.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: delta.len(),
            });
        }
        if gamma <= 0.0 {
            return Err(Error::InvalidPrior(format!(
                "gamma must be > 0, got {gamma}"
            )));
        }
        if nu <= n as f64 - 1.0 {
            return Err(Error::InvalidPrior(format!(
                "nu must exceed N - 1 = {}, got {nu}",
                n - 1
            )));
        }
        if !psi.is_positive_definite() {
            return Err(Error::InvalidPrior("psi must be positive definite".into()));
        }
        Ok(Self {
            delta,
            gamma,
            psi,
            nu,
        })
    }

    /// The evolution-path prior: centered at `m + r·sigma·p_c` with
    /// `gamma = c1/(r²·c_mu)` and `psi = (nu + N + 2 - c1/c_mu)·sigma²·C`.
    ///
    /// Feeding this prior into [`map_igo_update`] (with the covariance
    /// pre-scaled by sigma²) reproduces the rank-one covariance term plus the
    /// momentum mean term in closed form.
    #[allow(clippy::too_many_arguments)]
    pub fn rank_one(
        mean: &DVector<f64>,
        sigma: f64,
        cov: &SymMatrix,
        p_c_next: &DVector<f64>,
        r: f64,
        c1: f64,
        c_mu: f64,
        nu: f64,
    ) -> Result<Self> {
        let n = cov.dim();
        if r <= 0.0 {
            return Err(Error::InvalidPrior(format!("r must be > 0, got {r}")));
        }
        if c_mu <= 0.0 {
            return Err(Error::InvalidPrior(format!("c_mu must be > 0, got {c_mu}")));
        }
        if c1 <= 0.0 {
            return Err(Error::InvalidPrior(format!(
                "c1 must be > 0 for the evolution-path prior, got {c1}"
            )));
        }
        let coef = nu + n as f64 + 2.0 - c1 / c_mu;
        if coef <= 0.0 {
            return Err(Error::InvalidPrior(format!(
                "psi coefficient nu + N + 2 - c1/c_mu = {coef} must be > 0"
            )));
        }
        let delta = mean + r * sigma * p_c_next;
        let gamma = c1 / (r * r * c_mu);
        let psi = cov.scale(coef * sigma * sigma);
        Self::new(delta, gamma, psi, nu)
    }

    /// A prior whose natural-gradient terms vanish at `theta`
    /// (`delta = m`, `psi = (nu + N + 2)·C`); with it, [`map_igo_update`]
    /// reduces exactly to the prior-free rank-mu update.
    pub fn vanishing(theta: &NormalParams, gamma: f64, nu: f64) -> Result<Self> {
        let n = theta.dim() as f64;
        Self::new(theta.mean.clone(), gamma, theta.cov.scale(nu + n + 2.0), nu)
    }
}

/// Default inverse-Wishart degrees of freedom, `N + 2`.
///
/// The evolution-path closed forms are independent of `nu` (it cancels
/// between `psi` and the `-(nu + N + 2)·C` term); `N + 2` keeps the
/// inverse-Wishart mean finite.
pub fn default_nu(n: usize) -> f64 {
    (n + 2) as f64
}

/// A gradient over (mean, covariance) in block form. `d_cov` is symmetric but
/// not necessarily positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaGradient {
    pub d_mean: DVector<f64>,
    pub d_cov: SymMatrix,
}

impl ThetaGradient {
    pub fn zeros(n: usize) -> Self {
        Self {
            d_mean: DVector::zeros(n),
            d_cov: SymMatrix::zeros(n),
        }
    }
}

/// Natural gradient of `ln p_theta(x)` for the multivariate normal:
/// `d_m = x - m`, `d_C = (x - m)(x - m)ᵀ - C`.
pub fn natural_grad_loglik_normal(theta: &NormalParams, x: &DVector<f64>) -> Result<ThetaGradient> {
    let n = theta.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let d = x - &theta.mean;
    let outer = &d * d.transpose();
    let d_cov = SymMatrix::from_matrix(&(outer - theta.cov.as_matrix()))?;
    Ok(ThetaGradient { d_mean: d, d_cov })
}

/// Log density of the normal-inverse-Wishart prior at `theta`, including the
/// multivariate gamma normalizer.
pub fn niw_logpdf(prior: &NiwPrior, theta: &NormalParams) -> Result<f64> {
    let n = theta.dim() as f64;
    check_dims(prior, theta)?;

    let chol = theta.cov.cholesky()?;
    let ln_det_c = 2.0 * (0..theta.dim()).map(|i| chol[(i, i)].ln()).sum::<f64>();
    let cov_inv = theta.cov.inverse()?;

    let u = &theta.mean - &prior.delta;
    let quad = u.dot(&cov_inv.mul_vec(&u));

    let normal_part = 0.5 * n * (prior.gamma / (2.0 * std::f64::consts::PI)).ln()
        - 0.5 * ln_det_c
        - 0.5 * prior.gamma * quad;

    let psi_chol = prior.psi.cholesky()?;
    let ln_det_psi = 2.0 * (0..theta.dim()).map(|i| psi_chol[(i, i)].ln()).sum::<f64>();
    let trace_term = (prior.psi.as_matrix() * cov_inv.as_matrix()).trace();
    let nu = prior.nu;
    let iw_part = 0.5 * nu * ln_det_psi
        - 0.5 * nu * n * std::f64::consts::LN_2
        - ln_multivariate_gamma(theta.dim(), 0.5 * nu)
        - 0.5 * (nu + n + 1.0) * ln_det_c
        - 0.5 * trace_term;

    Ok(normal_part + iw_part)
}

/// `ln Γ_N(a) = N(N-1)/4 · ln π + Σ_{j=1..N} ln Γ(a + (1 - j)/2)`.
fn ln_multivariate_gamma(n: usize, a: f64) -> f64 {
    let nf = n as f64;
    nf * (nf - 1.0) / 4.0 * std::f64::consts::PI.ln()
        + (1..=n)
            .map(|j| ln_gamma(a + (1.0 - j as f64) / 2.0))
            .sum::<f64>()
}

/// Vanilla (Euclidean) gradient of the prior log density:
/// `d_m = -gamma·C⁻¹(m - delta)`,
/// `d_C = ½(gamma·C⁻¹(m-delta)(m-delta)ᵀC⁻¹ - (nu+N+2)·C⁻¹ + C⁻¹·psi·C⁻¹)`.
pub fn niw_vanilla_grad(prior: &NiwPrior, theta: &NormalParams) -> Result<ThetaGradient> {
    let n = theta.dim() as f64;
    check_dims(prior, theta)?;
    let cov_inv = theta.cov.inverse()?;

    let u = &theta.mean - &prior.delta;
    let w = cov_inv.mul_vec(&u);
    let d_mean = -prior.gamma * &w;

    let outer = prior.gamma * &w * w.transpose();
    let scaled_inv = cov_inv.as_matrix() * (prior.nu + n + 2.0);
    let sandwich = cov_inv.as_matrix() * prior.psi.as_matrix() * cov_inv.as_matrix();
    let d_cov = SymMatrix::from_matrix(&(0.5 * (outer - scaled_inv + sandwich)))?;
    Ok(ThetaGradient { d_mean, d_cov })
}

/// Applies the inverse Fisher metric of the multivariate normal,
/// `blockdiag(C, 2C⊗C)`, to a gradient in block form:
/// `d_m ↦ C·d_m`, `d_C ↦ 2·C·d_C·C`.
pub fn apply_inverse_fisher(theta: &NormalParams, g: &ThetaGradient) -> ThetaGradient {
    let c = theta.cov.as_matrix();
    let d_mean = c * &g.d_mean;
    let d_cov = 2.0 * (c * g.d_cov.as_matrix() * c);
    ThetaGradient {
        d_mean,
        d_cov: SymMatrix::from_matrix(&d_cov).expect("square by construction"),
    }
}

/// Natural gradient of the prior log density, in closed form (no inversion):
/// `d_m = -gamma·(m - delta)`,
/// `d_C = gamma·(m-delta)(m-delta)ᵀ + psi - (nu+N+2)·C`.
pub fn niw_natural_grad(prior: &NiwPrior, theta: &NormalParams) -> Result<ThetaGradient> {
    let n = theta.dim() as f64;
    check_dims(prior, theta)?;
    let u = &theta.mean - &prior.delta;
    let d_mean = -prior.gamma * &u;
    let outer = prior.gamma * &u * u.transpose();
    let d_cov = outer + prior.psi.as_matrix() - (prior.nu + n + 2.0) * theta.cov.as_matrix();
    Ok(ThetaGradient {
        d_mean,
        d_cov: SymMatrix::from_matrix(&d_cov).expect("square by construction"),
    })
}

/// One posterior-ascent step from ranked samples and a prior:
///
/// `m' = m + c_m·(Σ w_i (x_i - m) - gamma·(m - delta))`
///
/// `C' = C + c_mu·(Σ w_i ((x_i - m)(x_i - m)ᵀ - C)
///        + gamma·(m - delta)(m - delta)ᵀ + psi - (nu + N + 2)·C)`
///
/// `sorted_samples` must already be in ascending objective order (ties broken
/// by original sample index). The updated covariance is symmetrized and
/// checked for positive definiteness; [`Error::CovarianceCollapse`] is
/// returned if it fails, leaving the caller to decide whether to abort.
pub fn map_igo_update(
    theta: &NormalParams,
    sorted_samples: &[DVector<f64>],
    weights: &UtilityWeights,
    prior: &NiwPrior,
    c_m: f64,
    c_mu: f64,
) -> Result<NormalParams> {
    let n = theta.dim();
    check_dims(prior, theta)?;
    if sorted_samples.len() != weights.lambda() {
        return Err(Error::DimensionMismatch {
            expected: weights.lambda(),
            got: sorted_samples.len(),
        });
    }
    for x in sorted_samples {
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
    }

    let mut shift = DVector::zeros(n);
    let mut rank_mu = DMatrix::zeros(n, n);
    for (i, x) in sorted_samples.iter().enumerate().take(weights.mu()) {
        let w = weights.get(i);
        let d = x - &theta.mean;
        shift += w * &d;
        rank_mu += w * &d * d.transpose();
    }

    let u = &theta.mean - &prior.delta;
    let nf = n as f64;
    let mean_next = &theta.mean + c_m * (shift - prior.gamma * &u);

    let prior_term = prior.gamma * &u * u.transpose() + prior.psi.as_matrix()
        - (prior.nu + nf + 2.0) * theta.cov.as_matrix();
    let cov_next_raw =
        theta.cov.as_matrix() + c_mu * (rank_mu - theta.cov.as_matrix() + prior_term);
    let cov_next = SymMatrix::from_matrix(&cov_next_raw)?;
    if cov_next.min_eigenvalue() <= 0.0 {
        return Err(Error::CovarianceCollapse);
    }
    NormalParams::new(mean_next, cov_next)
}

fn check_dims(prior: &NiwPrior, theta: &NormalParams) -> Result<()> {
    if prior.psi.dim() != theta.dim() {
        return Err(Error::DimensionMismatch {
            expected: theta.dim(),
            got: prior.psi.dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_theta(m: f64, c: f64) -> NormalParams {
        NormalParams::new(
            DVector::from_column_slice(&[m]),
            SymMatrix::from_diagonal(&[c]),
        )
        .unwrap()
    }

    fn scalar_prior(delta: f64, gamma: f64, psi: f64, nu: f64) -> NiwPrior {
        NiwPrior::new(
            DVector::from_column_slice(&[delta]),
            gamma,
            SymMatrix::from_diagonal(&[psi]),
            nu,
        )
        .unwrap()
    }

    #[test]
    fn log_rank_lambda_two() {
        let w = UtilityWeights::log_rank(2);
        assert_eq!(w.as_slice(), &[1.0, 0.0]);
        assert_eq!(w.mu(), 1);
        assert_eq!(w.mu_eff(), 1.0);
    }

    #[test]
    fn log_rank_lambda_four() {
        // Raw weights ln(2.5) - ln(1) and ln(2.5) - ln(2), normalized.
        let w = UtilityWeights::log_rank(4);
        let raw1 = 2.5f64.ln();
        let raw2 = 2.5f64.ln() - 2.0f64.ln();
        let sum = raw1 + raw2;
        assert_relative_eq!(w.get(0), raw1 / sum, max_relative = 1e-15);
        assert_relative_eq!(w.get(1), raw2 / sum, max_relative = 1e-15);
        assert_eq!(w.get(2), 0.0);
        assert_eq!(w.get(3), 0.0);
        assert!((w.get(0) - 0.804).abs() < 1e-3);
    }

    #[test]
    fn log_rank_contract() {
        for lambda in [2, 3, 6, 11, 40, 700] {
            let w = UtilityWeights::log_rank(lambda);
            assert_eq!(w.mu(), lambda / 2);
            assert!((w.as_slice()[..w.mu()].iter().sum::<f64>() - 1.0).abs() <= 1e-15);
            assert!(w.as_slice().windows(2).all(|p| p[0] >= p[1]));
            assert!(w.get(w.mu() - 1) > 0.0);
            assert!(w.as_slice()[w.mu()..].iter().all(|&v| v == 0.0));
            UtilityWeights::new(w.as_slice().to_vec()).unwrap();
        }
    }

    #[test]
    fn custom_weights_validated() {
        assert!(UtilityWeights::new(vec![0.5, 0.5, 0.0]).is_ok());
        assert!(UtilityWeights::new(vec![0.4, 0.6, 0.0]).is_err()); // increasing
        assert!(UtilityWeights::new(vec![0.9, 0.2, 0.0]).is_err()); // sum != 1
        assert!(UtilityWeights::new(vec![1.0, 0.0, 0.5]).is_err()); // zero then positive
    }

    #[test]
    fn loglik_gradient_centered_sample() {
        let theta = scalar_theta(3.0, 2.5);
        let g = natural_grad_loglik_normal(&theta, &DVector::from_column_slice(&[3.0])).unwrap();
        assert_eq!(g.d_mean[0], 0.0);
        assert_eq!(g.d_cov.get(0, 0), -2.5);
    }

    #[test]
    fn loglik_gradient_scalar_case() {
        // m=0, C=1, x=2: d_m = 2, d_C = 4 - 1 = 3.
        let theta = scalar_theta(0.0, 1.0);
        let g = natural_grad_loglik_normal(&theta, &DVector::from_column_slice(&[2.0])).unwrap();
        assert_eq!(g.d_mean[0], 2.0);
        assert_eq!(g.d_cov.get(0, 0), 3.0);
    }

    #[test]
    fn loglik_gradient_symmetric() {
        let theta = NormalParams::new(
            DVector::from_column_slice(&[0.5, -1.0, 2.0]),
            SymMatrix::from_fn(3, |i, j| if i == j { 2.0 } else { 0.3 }),
        )
        .unwrap();
        let x = DVector::from_column_slice(&[1.1, 0.2, -0.7]);
        let g = natural_grad_loglik_normal(&theta, &x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g.d_cov.get(i, j).to_bits(), g.d_cov.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn niw_logpdf_scalar_closed_form() {
        // N=1, delta=0, gamma=1, psi=1, nu=3, m=0, C=1:
        // ln(1/sqrt(2π)) + ln(1/(2^{3/2} Γ(3/2)) · e^{-1/2}).
        let prior = scalar_prior(0.0, 1.0, 1.0, 3.0);
        let theta = scalar_theta(0.0, 1.0);
        let got = niw_logpdf(&prior, &theta).unwrap();
        let want = -0.5 * (2.0 * std::f64::consts::PI).ln()
            + (-1.5 * std::f64::consts::LN_2 - ln_gamma(1.5) - 0.5);
        assert_relative_eq!(got, want, max_relative = 1e-14);
    }

    #[test]
    fn niw_logpdf_translation_invariance() {
        let prior = NiwPrior::new(
            DVector::from_column_slice(&[0.4, -0.2]),
            1.7,
            SymMatrix::from_fn(2, |i, j| if i == j { 1.5 } else { 0.2 }),
            4.5,
        )
        .unwrap();
        let theta = NormalParams::new(
            DVector::from_column_slice(&[1.0, 2.0]),
            SymMatrix::from_fn(2, |i, j| if i == j { 0.8 } else { -0.1 }),
        )
        .unwrap();
        let t = DVector::from_column_slice(&[13.25, -7.5]);
        let shifted_prior =
            NiwPrior::new(&prior.delta + &t, prior.gamma, prior.psi.clone(), prior.nu).unwrap();
        let shifted_theta = NormalParams::new(&theta.mean + &t, theta.cov.clone()).unwrap();
        let a = niw_logpdf(&prior, &theta).unwrap();
        let b = niw_logpdf(&shifted_prior, &shifted_theta).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn vanilla_grad_scalar_case() {
        // N=1, gamma=2, delta=0, m=1, C=1, psi=1, nu=2 (nu+N+2 = 5):
        // d_m = -2, d_C = (2 - 5 + 1)/2 = -1.
        let prior = scalar_prior(0.0, 2.0, 1.0, 2.0);
        let theta = scalar_theta(1.0, 1.0);
        let g = niw_vanilla_grad(&prior, &theta).unwrap();
        assert_relative_eq!(g.d_mean[0], -2.0, max_relative = 1e-14);
        assert_relative_eq!(g.d_cov.get(0, 0), -1.0, max_relative = 1e-14);
    }

    #[test]
    fn vanilla_grad_vanishes_at_prior_mode() {
        // m = delta and C = psi/(nu+N+2) is the stationary point.
        let nu = 6.0;
        let n = 2.0;
        let psi = SymMatrix::from_fn(2, |i, j| if i == j { 2.0 } else { 0.5 });
        let theta = NormalParams::new(
            DVector::from_column_slice(&[0.3, -0.9]),
            psi.scale(1.0 / (nu + n + 2.0)),
        )
        .unwrap();
        let prior = NiwPrior::new(theta.mean.clone(), 1.3, psi, nu).unwrap();
        let g = niw_vanilla_grad(&prior, &theta).unwrap();
        assert!(g.d_mean.amax() < 1e-13);
        assert!(g.d_cov.as_matrix().amax() < 1e-13);
    }

    #[test]
    fn natural_grad_scalar_case() {
        let prior = scalar_prior(0.0, 2.0, 1.0, 2.0);
        let theta = scalar_theta(1.0, 1.0);
        let g = niw_natural_grad(&prior, &theta).unwrap();
        assert_eq!(g.d_mean[0], -2.0);
        assert_eq!(g.d_cov.get(0, 0), 2.0 + 1.0 - 5.0);
    }

    #[test]
    fn inverse_fisher_identity_metric() {
        let theta = NormalParams::new(DVector::zeros(2), SymMatrix::identity(2)).unwrap();
        let g = ThetaGradient {
            d_mean: DVector::from_column_slice(&[1.0, -2.0]),
            d_cov: SymMatrix::from_fn(2, |i, j| if i == j { 0.5 } else { 0.25 }),
        };
        let out = apply_inverse_fisher(&theta, &g);
        assert_eq!(out.d_mean, g.d_mean);
        assert_eq!(out.d_cov, g.d_cov.scale(2.0));

        let zero = apply_inverse_fisher(&theta, &ThetaGradient::zeros(2));
        assert_eq!(zero.d_mean, DVector::zeros(2));
        assert_eq!(zero.d_cov, SymMatrix::zeros(2));
    }

    #[test]
    fn fisher_maps_vanilla_to_natural() {
        let prior = NiwPrior::new(
            DVector::from_column_slice(&[0.5, -0.25, 1.0]),
            0.7,
            SymMatrix::from_fn(3, |i, j| if i == j { 2.0 + i as f64 } else { 0.4 }),
            5.5,
        )
        .unwrap();
        let theta = NormalParams::new(
            DVector::from_column_slice(&[1.5, 0.0, -2.0]),
            SymMatrix::from_fn(3, |i, j| if i == j { 1.0 + 0.5 * i as f64 } else { 0.2 }),
        )
        .unwrap();
        let natural = niw_natural_grad(&prior, &theta).unwrap();
        let mapped = apply_inverse_fisher(&theta, &niw_vanilla_grad(&prior, &theta).unwrap());
        for i in 0..3 {
            assert_relative_eq!(mapped.d_mean[i], natural.d_mean[i], max_relative = 1e-12);
            for j in 0..3 {
                assert_relative_eq!(
                    mapped.d_cov.get(i, j),
                    natural.d_cov.get(i, j),
                    max_relative = 1e-12,
                    epsilon = 1e-13
                );
            }
        }
    }

    #[test]
    fn update_with_zero_rates_is_identity() {
        let theta = NormalParams::new(
            DVector::from_column_slice(&[1.0, 2.0]),
            SymMatrix::identity(2),
        )
        .unwrap();
        let prior = NiwPrior::vanishing(&theta, 1.0, default_nu(2)).unwrap();
        let w = UtilityWeights::log_rank(4);
        let samples: Vec<DVector<f64>> = (0..4)
            .map(|i| DVector::from_column_slice(&[i as f64, -(i as f64)]))
            .collect();
        let out = map_igo_update(&theta, &samples, &w, &prior, 0.0, 0.0).unwrap();
        assert_eq!(out.mean, theta.mean);
        assert_eq!(out.cov, theta.cov);
    }

    #[test]
    fn update_term_by_term_oracle() {
        // N=2, lambda=4: compare against a literal term-by-term evaluation of
        // the two update formulas using plain scalar arithmetic.
        let m = [0.4, -0.8];
        let c = [[1.2, 0.3], [0.3, 0.9]];
        let delta = [1.0, 0.5];
        let (gamma, nu) = (0.2, 2.5);
        // Close to (nu + N + 2)·C so the prior pull keeps C' positive definite.
        let psi = [[7.6, 1.8], [1.8, 5.6]];
        let xs = [[1.0, 0.2], [-0.3, 0.4], [0.8, -1.5], [2.0, 1.0]];
        let (c_m, c_mu) = (0.7, 0.15);

        let theta = NormalParams::new(
            DVector::from_column_slice(&m),
            SymMatrix::from_fn(2, |i, j| c[i][j]),
        )
        .unwrap();
        let prior = NiwPrior::new(
            DVector::from_column_slice(&delta),
            gamma,
            SymMatrix::from_fn(2, |i, j| psi[i][j]),
            nu,
        )
        .unwrap();
        let weights = UtilityWeights::log_rank(4);
        let samples: Vec<DVector<f64>> = xs.iter().map(|x| DVector::from_column_slice(x)).collect();
        let got = map_igo_update(&theta, &samples, &weights, &prior, c_m, c_mu).unwrap();

        // Independent evaluation with nested loops over plain arrays.
        let w = [weights.get(0), weights.get(1), 0.0, 0.0];
        let mut want_m = [0.0f64; 2];
        for k in 0..2 {
            let mut shift = 0.0;
            for i in 0..4 {
                shift += w[i] * (xs[i][k] - m[k]);
            }
            want_m[k] = m[k] + c_m * (shift - gamma * (m[k] - delta[k]));
        }
        let mut want_c = [[0.0f64; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let mut rank_mu = 0.0;
                for i in 0..4 {
                    rank_mu += w[i] * ((xs[i][a] - m[a]) * (xs[i][b] - m[b]) - c[a][b]);
                }
                let prior_term = gamma * (m[a] - delta[a]) * (m[b] - delta[b]) + psi[a][b]
                    - (nu + 4.0) * c[a][b];
                want_c[a][b] = c[a][b] + c_mu * (rank_mu + prior_term);
            }
        }
        for k in 0..2 {
            assert_relative_eq!(got.mean[k], want_m[k], max_relative = 1e-14);
            for (l, want) in want_c[k].iter().enumerate() {
                assert_relative_eq!(got.cov.get(k, l), *want, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn rank_one_prior_construction() {
        let m = DVector::from_column_slice(&[1.0, -2.0]);
        let c = SymMatrix::from_fn(2, |i, j| if i == j { 1.5 } else { 0.25 });
        let p_c = DVector::from_column_slice(&[0.3, 0.1]);
        let (sigma, c1, c_mu, nu) = (0.8, 0.1, 0.25, default_nu(2));

        // Centered on the current mean when the path is zero.
        let prior =
            NiwPrior::rank_one(&m, sigma, &c, &DVector::zeros(2), 2.0, c1, c_mu, nu).unwrap();
        assert_eq!(prior.delta, m);

        // Doubling r quarters gamma, doubles the displacement, leaves psi.
        let p1 = NiwPrior::rank_one(&m, sigma, &c, &p_c, 1.0, c1, c_mu, nu).unwrap();
        let p2 = NiwPrior::rank_one(&m, sigma, &c, &p_c, 2.0, c1, c_mu, nu).unwrap();
        assert_relative_eq!(p2.gamma, p1.gamma / 4.0, max_relative = 1e-15);
        assert_eq!(&p2.delta - &m, (&p1.delta - &m) * 2.0);
        assert_eq!(p1.psi, p2.psi);
    }

    #[test]
    fn rank_one_prior_rejects_inconsistent_settings() {
        let m = DVector::zeros(2);
        let c = SymMatrix::identity(2);
        let p_c = DVector::zeros(2);
        // nu + N + 2 - c1/c_mu <= 0.
        let err = NiwPrior::rank_one(&m, 1.0, &c, &p_c, 1.0, 0.9, 0.1, 2.5).unwrap_err();
        assert!(matches!(err, Error::InvalidPrior(_)));
        assert!(NiwPrior::rank_one(&m, 1.0, &c, &p_c, 0.0, 0.1, 0.2, 4.0).is_err());
    }
}
