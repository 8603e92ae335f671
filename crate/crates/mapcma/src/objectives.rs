//! The six benchmark functions and their experiment metadata.
//!
//! Functions are defined on all of R^N (no search-space bounds); evaluation
//! counting lives in the harness so these stay pure.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Benchmark function identifier. The lower-case names are the canonical
/// strings used in CLI flags and config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Function {
    Sphere,
    Ellipsoid,
    Cigar,
    Rosenbrock,
    Ackley,
    Rastrigin,
}

impl Function {
    pub const ALL: [Function; 6] = [
        Function::Sphere,
        Function::Ellipsoid,
        Function::Cigar,
        Function::Rosenbrock,
        Function::Ackley,
        Function::Rastrigin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Function::Sphere => "sphere",
            Function::Ellipsoid => "ellipsoid",
            Function::Cigar => "cigar",
            Function::Rosenbrock => "rosenbrock",
            Function::Ackley => "ackley",
            Function::Rastrigin => "rastrigin",
        }
    }

    /// Initialization interval `(a, b)`: the initial mean is drawn uniformly
    /// from `[a, b]^N` and the initial step-size is `(b - a)/2`.
    pub fn init_box(self) -> (f64, f64) {
        match self {
            Function::Sphere | Function::Ellipsoid | Function::Cigar | Function::Rastrigin => {
                (1.0, 5.0)
            }
            Function::Rosenbrock => (-2.0, 2.0),
            Function::Ackley => (1.0, 30.0),
        }
    }
}

impl fmt::Display for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Function {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Function::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown function \"{s}\"")))
    }
}

/// A benchmark function instantiated at a fixed dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Objective {
    function: Function,
    dim: usize,
}

impl Objective {
    /// Requires `dim >= 2`: the Rosenbrock and Ellipsoid definitions need at
    /// least two coordinates.
    pub fn new(function: Function, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidConfig(format!(
                "objective dimension must be >= 2, got {dim}"
            )));
        }
        Ok(Self { function, dim })
    }

    pub fn function(&self) -> Function {
        self.function
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn init_box(&self) -> (f64, f64) {
        self.function.init_box()
    }

    /// Exact formula value; deterministic and side-effect free.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let n = self.dim as f64;
        let value = match self.function {
            Function::Sphere => canonical_sum(x.iter().map(|&v| v * v)),
            Function::Ellipsoid => {
                let last = (self.dim - 1) as f64;
                x.iter()
                    .enumerate()
                    .map(|(i, &v)| 10f64.powf(6.0 * i as f64 / last) * v * v)
                    .sum()
            }
            Function::Cigar => x[0] * x[0] + 1e6 * x[1..].iter().map(|&v| v * v).sum::<f64>(),
            Function::Rosenbrock => x
                .windows(2)
                .map(|w| {
                    let (a, b) = (w[0], w[1]);
                    100.0 * (a * a - b) * (a * a - b) + (a - 1.0) * (a - 1.0)
                })
                .sum(),
            Function::Ackley => {
                let mean_sq = canonical_sum(x.iter().map(|&v| v * v)) / n;
                let mean_cos = canonical_sum(x.iter().map(|&v| (2.0 * PI * v).cos())) / n;
                20.0 - 20.0 * (-0.2 * mean_sq.sqrt()).exp() + E - mean_cos.exp()
            }
            Function::Rastrigin => {
                10.0 * n + canonical_sum(x.iter().map(|&v| v * v - 10.0 * (2.0 * PI * v).cos()))
            }
        };
        Ok(value)
    }
}

/// Sums in a canonical (sorted) order so that the permutation-symmetric
/// functions evaluate bit-identically under any permutation of the input.
fn canonical_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = terms.collect();
    v.sort_unstable_by(f64::total_cmp);
    v.iter().sum()
}

/// Running evaluation counter against a fixed budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalBudget {
    used: u64,
    max: u64,
}

impl EvalBudget {
    pub fn new(max: u64) -> Self {
        assert!(max > 0, "budget must be positive");
        Self { used: 0, max }
    }

    pub fn charge(&mut self, n: u64) {
        self.used += n;
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn max(&self) -> u64 {
        self.max
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.max
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(f: Function, dim: usize) -> Objective {
        Objective::new(f, dim).unwrap()
    }

    #[test]
    fn optima() {
        let zero = vec![0.0; 8];
        assert_eq!(obj(Function::Sphere, 8).evaluate(&zero).unwrap(), 0.0);
        assert_eq!(obj(Function::Ellipsoid, 8).evaluate(&zero).unwrap(), 0.0);
        assert_eq!(obj(Function::Cigar, 8).evaluate(&zero).unwrap(), 0.0);
        assert_eq!(
            obj(Function::Rosenbrock, 8).evaluate(&[1.0; 8]).unwrap(),
            0.0
        );
        assert!(obj(Function::Rastrigin, 8).evaluate(&zero).unwrap().abs() <= 1e-12);
        // Transcendental cancellation (e - exp(1)) leaves a few ulps.
        assert!(obj(Function::Ackley, 8).evaluate(&zero).unwrap().abs() <= 1e-9);
    }

    #[test]
    fn ellipsoid_two_dim_conditioning() {
        // Exponent is 10^{6(i-1)/(N-1)}: 1 and 10^6 at N=2.
        let v = obj(Function::Ellipsoid, 2).evaluate(&[1.0, 1.0]).unwrap();
        assert_eq!(v, 1.0 + 1.0e6);
    }

    #[test]
    fn cigar_three_dim() {
        let v = obj(Function::Cigar, 3).evaluate(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(v, 1.0 + 2.0e6);
    }

    #[test]
    fn rosenbrock_formula_spot_check() {
        // N=2, x=(0,0): 100*(0-0)^2 + (0-1)^2 = 1.
        let v = obj(Function::Rosenbrock, 2).evaluate(&[0.0, 0.0]).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = obj(Function::Sphere, 3).evaluate(&[1.0, 2.0]).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 3,
                got: 2
            }
        );
    }

    #[test]
    fn dim_one_rejected() {
        assert!(Objective::new(Function::Rosenbrock, 1).is_err());
    }

    #[test]
    fn permutation_symmetry_is_exact() {
        let x = [1.37, -0.25, 9.001, 4.5e-3, -2.75, 0.125];
        let mut p = x;
        p.reverse();
        p.swap(1, 3);
        for f in [Function::Sphere, Function::Ackley, Function::Rastrigin] {
            let o = obj(f, x.len());
            assert_eq!(
                o.evaluate(&x).unwrap().to_bits(),
                o.evaluate(&p).unwrap().to_bits(),
                "{f} not permutation symmetric"
            );
        }
    }

    #[test]
    fn init_boxes_match_protocol() {
        assert_eq!(Function::Sphere.init_box(), (1.0, 5.0));
        assert_eq!(Function::Ellipsoid.init_box(), (1.0, 5.0));
        assert_eq!(Function::Cigar.init_box(), (1.0, 5.0));
        assert_eq!(Function::Rastrigin.init_box(), (1.0, 5.0));
        assert_eq!(Function::Rosenbrock.init_box(), (-2.0, 2.0));
        assert_eq!(Function::Ackley.init_box(), (1.0, 30.0));
    }

    #[test]
    fn names_round_trip() {
        for f in Function::ALL {
            assert_eq!(f.name().parse::<Function>().unwrap(), f);
        }
        assert!("sphere2".parse::<Function>().is_err());
    }

    #[test]
    fn budget_counts() {
        let mut b = EvalBudget::new(10);
        b.charge(6);
        assert!(!b.exhausted());
        b.charge(4);
        assert!(b.exhausted());
        assert_eq!(b.used(), 10);
    }
}
