//! Small dense complex matrices (dimension 2 to 8) for qudit numerics.
//!
//! Everything here is value-semantic: matrices are plain row-major buffers and
//! every operation returns a fresh result. The three role types
//! ([`ComplexMatrix`], [`UnitaryMatrix`], [`DensityMatrix`]) differ only in the
//! invariants they certify.

mod eigen;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub use eigen::{hermitian_eigen, HermitianEigen};

/// Maximum entrywise |A - A†| accepted as Hermitian.
pub const TOL_HERM: f64 = 1e-12;
/// Maximum |tr ρ - 1| accepted for a density matrix.
pub const TOL_TRACE: f64 = 1e-12;
/// Most negative eigenvalue accepted as positive semidefinite.
pub const TOL_PSD: f64 = 1e-10;
/// Maximum entrywise |U†U - I| promised by [`expm_hermitian`].
pub const TOL_UNITARY: f64 = 1e-12;

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QmatError {
    #[error("matrix dimension {0} outside supported range {MIN_DIM}..={MAX_DIM}")]
    InvalidDimension(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not Hermitian: max |A - A^dagger| = {residual:e}")]
    NotHermitian { residual: f64 },
    #[error("trace is not one: |tr - 1| = {residual:e}")]
    TraceNotOne { residual: f64 },
    #[error("matrix is not positive semidefinite: min eigenvalue = {min_eigenvalue:e}")]
    NotPsd { min_eigenvalue: f64 },
    #[error("matrix is not unitary: max |U^dagger U - I| = {residual:e}")]
    NotUnitary { residual: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("non-finite evolution time {0}")]
    NonFiniteTime(f64),
}

fn check_dim(dim: usize) -> Result<(), QmatError> {
    if (MIN_DIM..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(QmatError::InvalidDimension(dim))
    }
}

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Zero matrix.
    ///
    /// Panics if `dim` is outside `2..=8`; use [`ComplexMatrix::from_rows`]
    /// for fallible construction from user data.
    pub fn zeros(dim: usize) -> Self {
        check_dim(dim).expect("ComplexMatrix::zeros");
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Real diagonal matrix.
    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn from_complex_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, QmatError> {
        let dim = rows.len();
        check_dim(dim)?;
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(QmatError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QmatError::NonFinite);
        }
        Ok(Self { dim, data })
    }

    /// Outer product |psi><psi|.
    pub fn outer(psi: &[Complex64]) -> Self {
        Self::from_fn(psi.len(), |i, j| psi[i] * psi[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// max_ij |A_ij - conj(A_ji)|
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_residual() <= TOL_HERM
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self[(i, j)] == Complex64::new(0.0, 0.0)))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "max_abs_diff: dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let gram = &self.adjoint() * self;
        let eig = hermitian_eigen(&gram).expect("A^dagger A is Hermitian by construction");
        eig.values.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt()
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self, QmatError> {
        if self.dim != rhs.dim {
            return Err(QmatError::DimensionMismatch {
                expected: self.dim,
                found: rhs.dim,
            });
        }
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim, "apply: dimension mismatch");
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).map(|k| self.data[i * n + k] * v[k]).sum())
            .collect()
    }

    /// In-place matrix-vector product using `scratch` as workspace.
    pub fn apply_in_place(&self, v: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.dim;
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            scratch[i] = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        }
        v[..n].copy_from_slice(&scratch[..n]);
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_mul(rhs).expect("matrix product: dimension mismatch")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix sum: dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix difference: dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// A matrix certified unitary (within [`TOL_UNITARY`]) by its constructor.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix(ComplexMatrix);

impl UnitaryMatrix {
    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    /// The level swap `u_ij = I + |i><j| + |j><i| - |i><i| - |j><j|`.
    pub fn swap(dim: usize, i: usize, j: usize) -> Self {
        assert!(i < dim && j < dim && i != j, "swap({i}, {j}) invalid for dim {dim}");
        let mut m = ComplexMatrix::identity(dim);
        m[(i, i)] = Complex64::new(0.0, 0.0);
        m[(j, j)] = Complex64::new(0.0, 0.0);
        m[(i, j)] = Complex64::new(1.0, 0.0);
        m[(j, i)] = Complex64::new(1.0, 0.0);
        Self(m)
    }

    /// Diagonal unitary `diag(exp(-i d_k t))`.
    pub fn diagonal_phases(diag: &[f64], t: f64) -> Self {
        let phases: Vec<Complex64> = diag.iter().map(|&d| Complex64::from_polar(1.0, -d * t)).collect();
        Self(ComplexMatrix::from_complex_diag(&phases))
    }

    /// Wraps `m` after checking `max |U^dagger U - I| <= tol`.
    pub fn try_new(m: ComplexMatrix, tol: f64) -> Result<Self, QmatError> {
        let r = unitarity_residual(&m);
        if r <= tol {
            Ok(Self(m))
        } else {
            Err(QmatError::NotUnitary { residual: r })
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// Product `self * rhs` (apply `rhs` first).
    pub fn then_after(&self, rhs: &UnitaryMatrix) -> Self {
        Self(&self.0 * &rhs.0)
    }
}

/// max_ij |(U^dagger U - I)_ij|
pub fn unitarity_residual(u: &ComplexMatrix) -> f64 {
    (&(&u.adjoint() * u) - &ComplexMatrix::identity(u.dim())).as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    /// `|psi><psi|` for a normalized state vector; panics if `psi` has an
    /// unsupported length.
    pub fn from_pure(psi: &[Complex64]) -> Self {
        Self(ComplexMatrix::outer(psi))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn purity(&self) -> f64 {
        // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
        self.0.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn population(&self, level: usize) -> f64 {
        self.0[(level, level)].re
    }

    pub fn coherence(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }
}

/// `exp(-i H t)` via Hermitian eigendecomposition.
pub fn expm_hermitian(h: &ComplexMatrix, t: f64) -> Result<UnitaryMatrix, QmatError> {
    if !t.is_finite() {
        return Err(QmatError::NonFiniteTime(t));
    }
    if !h.is_finite() {
        return Err(QmatError::NonFinite);
    }
    let residual = h.hermiticity_residual();
    if residual > TOL_HERM {
        return Err(QmatError::NotHermitian { residual });
    }
    if h.is_diagonal() {
        let d: Vec<f64> = h.diagonal().iter().map(|z| z.re).collect();
        return Ok(UnitaryMatrix::diagonal_phases(&d, t));
    }
    let eig = hermitian_eigen(h)?;
    let n = h.dim();
    let phases: Vec<Complex64> = eig.values.iter().map(|&e| Complex64::from_polar(1.0, -e * t)).collect();
    let v = &eig.vectors;
    let u = ComplexMatrix::from_fn(n, |i, j| (0..n).map(|k| v[(i, k)] * phases[k] * v[(j, k)].conj()).sum());
    Ok(UnitaryMatrix(u))
}

/// Validates Hermiticity, unit trace and positivity; returns a certified
/// [`DensityMatrix`] or the first violated invariant with its residual.
pub fn validate_density(rho: &ComplexMatrix) -> Result<DensityMatrix, QmatError> {
    validate_density_with(rho, TOL_HERM, TOL_PSD)
}

/// [`validate_density`] with explicit Hermiticity and positivity tolerances
/// (ensemble averages accumulate more rounding than a single state).
pub fn validate_density_with(rho: &ComplexMatrix, tol_herm: f64, tol_psd: f64) -> Result<DensityMatrix, QmatError> {
    check_dim(rho.dim())?;
    if !rho.is_finite() {
        return Err(QmatError::NonFinite);
    }
    let residual = rho.hermiticity_residual();
    if residual > tol_herm {
        return Err(QmatError::NotHermitian { residual });
    }
    let tr = rho.trace();
    let trace_residual = (tr - Complex64::new(1.0, 0.0)).norm();
    if trace_residual > tol_herm.max(TOL_TRACE) {
        return Err(QmatError::TraceNotOne { residual: trace_residual });
    }
    // Symmetrize before the eigensolve so rounding-level skew does not leak in.
    let sym = (rho + &rho.adjoint()).scale_real(0.5);
    let eig = hermitian_eigen(&sym)?;
    let min_eigenvalue = eig.values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eigenvalue < -tol_psd {
        return Err(QmatError::NotPsd { min_eigenvalue });
    }
    Ok(DensityMatrix(rho.clone()))
}

/// `U^dagger A U`.
pub fn conjugate(u: &UnitaryMatrix, a: &ComplexMatrix) -> Result<ComplexMatrix, QmatError> {
    if u.dim() != a.dim() {
        return Err(QmatError::DimensionMismatch {
            expected: u.dim(),
            found: a.dim(),
        });
    }
    Ok(&(&u.0.adjoint() * a) * &u.0)
}
