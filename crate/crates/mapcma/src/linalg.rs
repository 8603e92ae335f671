//! Dense symmetric-matrix kernels shared by the numeric modules.
//!
//! Everything here is value-level and allocation-per-call; search dimensions
//! stay small (N ≤ 100 in the benchmark protocol), so O(N³) dense kernels
//! are the right trade-off over structured or sparse representations.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// A dense square matrix that is symmetric *exactly*: `a[(i, j)]` and
/// `a[(j, i)]` are bit-identical, enforced by symmetrization on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Symmetrizes an arbitrary square matrix as `(A + Aᵀ)/2`.
    ///
    /// Both mirror entries are computed by the same expression, so the result
    /// is symmetric to the bit.
    pub fn from_matrix(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        if a.nrows() == 0 {
            return Err(Error::InvalidConfig("matrix dimension must be >= 1".into()));
        }
        let m = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
        Ok(Self { m })
    }

    /// Builds from an entry function evaluated on the upper triangle and
    /// mirrored below it.
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        assert!(dim >= 1, "matrix dimension must be >= 1");
        let m = DMatrix::from_fn(dim, dim, |i, j| if i <= j { f(i, j) } else { f(j, i) });
        Self { m }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be >= 1");
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "matrix dimension must be >= 1");
        Self {
            m: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be >= 1");
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// Borrows the underlying dense storage.
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    /// Scales every entry; exact symmetry is preserved.
    pub fn scale(&self, c: f64) -> Self {
        Self { m: &self.m * c }
    }

    pub fn mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.m * v
    }

    /// Lower-triangular Cholesky factor `L` with `L·Lᵀ = A`.
    ///
    /// Fails with [`Error::NotPositiveDefinite`] when a pivot is non-positive,
    /// which is how covariance collapse first becomes visible.
    pub fn cholesky(&self) -> Result<DMatrix<f64>> {
        Cholesky::new(self.m.clone())
            .map(|c| c.unpack())
            .ok_or(Error::NotPositiveDefinite)
    }

    /// Inverse via the Cholesky factorization.
    pub fn inverse(&self) -> Result<SymMatrix> {
        let inv = Cholesky::new(self.m.clone())
            .map(|c| c.inverse())
            .ok_or(Error::NotPositiveDefinite)?;
        SymMatrix::from_matrix(&inv)
    }

    /// Symmetric inverse square root `B = A^{-1/2}` with `B·A·B ≈ I`.
    ///
    /// Eigendecomposition gives the unique symmetric root; eigenvalues below
    /// `eig_floor` are clamped to it before inversion, which makes the
    /// operation total. The returned flag reports whether any clamp happened.
    pub fn inv_sqrt(&self, eig_floor: f64) -> (SymMatrix, bool) {
        let eig = SymmetricEigen::new(self.m.clone());
        let mut clamped = false;
        let inv_roots = eig.eigenvalues.map(|v| {
            let v = if v < eig_floor {
                clamped = true;
                eig_floor
            } else {
                v
            };
            1.0 / v.sqrt()
        });
        let scaled = &eig.eigenvectors * DMatrix::from_diagonal(&inv_roots);
        let b = scaled * eig.eigenvectors.transpose();
        let sym = SymMatrix::from_matrix(&b).expect("square by construction");
        (sym, clamped)
    }

    /// Scale-relative clamp floor used by [`SymMatrix::inv_sqrt`] callers:
    /// `1e-30 · trace(A)/dim`. The 1e-30 termination test of the experiment
    /// protocol uses [`SymMatrix::min_eigenvalue`] directly, unclamped.
    pub fn default_eig_floor(&self) -> f64 {
        1e-30 * self.trace() / self.dim() as f64
    }

    /// Smallest eigenvalue, from the symmetric eigendecomposition.
    pub fn min_eigenvalue(&self) -> f64 {
        let eig = SymmetricEigen::new(self.m.clone());
        eig.eigenvalues.min()
    }

    pub fn is_positive_definite(&self) -> bool {
        Cholesky::new(self.m.clone()).is_some()
    }
}

impl std::ops::Add for &SymMatrix {
    type Output = SymMatrix;

    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        SymMatrix {
            m: &self.m + &rhs.m,
        }
    }
}

impl std::ops::Sub for &SymMatrix {
    type Output = SymMatrix;

    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        SymMatrix {
            m: &self.m - &rhs.m,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).abs().max()
    }

    #[test]
    fn cholesky_identity() {
        let a = SymMatrix::identity(3);
        let l = a.cholesky().unwrap();
        assert_eq!(l, DMatrix::identity(3, 3));
    }

    #[test]
    fn cholesky_diagonal_square_roots() {
        let a = SymMatrix::from_diagonal(&[4.0, 9.0]);
        let l = a.cholesky().unwrap();
        assert_eq!(
            l,
            DMatrix::from_diagonal(&DVector::from_column_slice(&[2.0, 3.0]))
        );
    }

    #[test]
    fn cholesky_reconstructs_full_matrix() {
        let a = SymMatrix::from_fn(2, |i, j| if i == j { 2.0 } else { 1.0 });
        let l = a.cholesky().unwrap();
        let back = &l * l.transpose();
        assert!(max_abs_diff(&back, a.as_matrix()) < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        // Eigenvalues 3 and -1.
        let a = SymMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { 2.0 });
        assert_eq!(a.cholesky(), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn inv_sqrt_identity() {
        let (b, clamped) = SymMatrix::identity(5).inv_sqrt(1e-30);
        assert!(!clamped);
        assert!(max_abs_diff(b.as_matrix(), &DMatrix::identity(5, 5)) < 1e-14);
    }

    #[test]
    fn inv_sqrt_diagonal() {
        let (b, _) = SymMatrix::from_diagonal(&[4.0, 16.0]).inv_sqrt(1e-30);
        let want = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.5, 0.25]));
        assert!(max_abs_diff(b.as_matrix(), &want) < 1e-14);
    }

    #[test]
    fn inv_sqrt_reconstruction_random_pd() {
        // Fixed well-conditioned 4x4 PD matrix: M Mᵀ + I.
        let m = DMatrix::from_fn(4, 4, |i, j| ((3 * i + 5 * j + 1) % 7) as f64 / 7.0);
        let pd = &m * m.transpose() + DMatrix::identity(4, 4);
        let a = SymMatrix::from_matrix(&pd).unwrap();
        let (b, clamped) = a.inv_sqrt(a.default_eig_floor());
        assert!(!clamped);
        let recon = b.as_matrix() * a.as_matrix() * b.as_matrix();
        assert!(max_abs_diff(&recon, &DMatrix::identity(4, 4)) < 1e-10);
    }

    #[test]
    fn inv_sqrt_clamp_reported() {
        let a = SymMatrix::from_diagonal(&[1.0, 1e-40]);
        let (b, clamped) = a.inv_sqrt(1e-20);
        assert!(clamped);
        assert!(b.get(1, 1).is_finite());
    }

    #[test]
    fn min_eigenvalue_diagonal() {
        assert_eq!(SymMatrix::from_diagonal(&[3.0, 7.0]).min_eigenvalue(), 3.0);
    }

    #[test]
    fn min_eigenvalue_tiny_scale() {
        let a = SymMatrix::identity(2).scale(1e-31);
        let lam = a.min_eigenvalue();
        assert!((lam - 1e-31).abs() <= 1e-14 * 1e-31 + f64::MIN_POSITIVE);
        assert!(lam < 1e-30);
    }

    #[test]
    fn min_eigenvalue_two_by_two() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let a = SymMatrix::from_fn(2, |i, j| if i == j { 2.0 } else { 1.0 });
        assert!((a.min_eigenvalue() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn symmetrization_is_exact() {
        let raw =
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3000000000000001, 0.2999999999999999, 2.0]);
        let a = SymMatrix::from_matrix(&raw).unwrap();
        assert_eq!(a.get(0, 1).to_bits(), a.get(1, 0).to_bits());
    }
}
