//! Dense small-matrix complex linear algebra.
//!
//! Everything here works on [`Matrix`], a thin newtype over an
//! `nalgebra::DMatrix<Complex64>` that refuses non-finite entries. System
//! matrices in this crate are tiny (`p ≤ 16`) so the routines favour clarity
//! and robustness over blocking or cache tricks.

mod eigen_condition;
mod expm;
mod spectral;
mod triangularize;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub use eigen_condition::{check_eigen_condition, eigen_expression, EigenCondition};
pub use expm::{expm, expm_integral};
pub use spectral::{eigenvalues, spectral_split, spectral_split_with, SpectralSplit, SplitMode};
pub use triangularize::{
    simultaneous_triangularize, simultaneous_triangularize_with, TriangularizeError,
    Triangularization,
};

/// Complex column vector.
pub type CVector = DVector<Complex64>;

/// Largest dimension the library is sized for.
pub const MAX_DIMENSION: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is numerically singular")]
    Singular,
    #[error("matrix exponential needs {squarings} squarings (cap {cap}); ‖At‖ = {norm:e} is ill-posed")]
    ExpOverflow { norm: f64, squarings: u32, cap: u32 },
    #[error("eigenvalue iteration did not converge")]
    NonConvergence,
    #[error("eigenvalue {eigenvalue} lies within {margin:e} of the dichotomy boundary: no exponential dichotomy")]
    BoundaryEigenvalue { eigenvalue: Complex64, margin: f64 },
    #[error("ragged row data: row {row} has {len} entries, expected {expected}")]
    Ragged { row: usize, len: usize, expected: usize },
}

/// Square or rectangular complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    data: DMatrix<Complex64>,
}

impl Matrix {
    pub fn new(data: DMatrix<Complex64>) -> Result<Self, MatrixError> {
        for j in 0..data.ncols() {
            for i in 0..data.nrows() {
                let z = data[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(MatrixError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self { data })
    }

    pub(crate) fn from_inner(data: DMatrix<Complex64>) -> Self {
        Self { data }
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let complex: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_complex_rows(&complex)
    }

    pub fn from_complex_rows(rows: &[Vec<Complex64>]) -> Result<Self, MatrixError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(MatrixError::Ragged { row: i, len: r.len(), expected: ncols });
            }
        }
        Self::new(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self { data: DMatrix::identity(n, n) }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { data: DMatrix::zeros(rows, cols) }
    }

    pub fn scalar(z: Complex64) -> Self {
        Self { data: DMatrix::from_element(1, 1, z) }
    }

    pub fn real_scalar(x: f64) -> Self {
        Self::scalar(Complex64::new(x, 0.0))
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        Self { data: DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { Complex64::new(0.0, 0.0) }) }
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn dim(&self) -> usize {
        self.rows()
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn as_dmatrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_dmatrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn require_square(&self) -> Result<usize, MatrixError> {
        if self.is_square() {
            Ok(self.rows())
        } else {
            Err(MatrixError::NotSquare { rows: self.rows(), cols: self.cols() })
        }
    }

    /// Row-major nested vector of entries.
    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.rows()).map(|i| (0..self.cols()).map(|j| self.data[(i, j)]).collect()).collect()
    }

    /// Induced ∞-norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.data[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.cols())
            .map(|j| (0..self.rows()).map(|i| self.data[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> Self {
        Self { data: self.data.adjoint() }
    }

    pub fn transpose(&self) -> Self {
        Self { data: self.data.transpose() }
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self { data: &self.data * z }
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.scale(Complex64::new(x, 0.0))
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        &self.data * v
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows().min(self.cols())).map(|i| self.data[(i, i)]).collect()
    }

    pub fn trace(&self) -> Complex64 {
        self.diagonal().into_iter().sum()
    }

    pub fn determinant(&self) -> Result<Complex64, MatrixError> {
        self.require_square()?;
        Ok(self.data.clone().lu().determinant())
    }

    /// Solves `self · X = rhs` with partial-pivot LU.
    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix, MatrixError> {
        let n = self.require_square()?;
        if rhs.rows() != n {
            return Err(MatrixError::DimensionMismatch(format!(
                "solve: {n}x{n} system against {} rows",
                rhs.rows()
            )));
        }
        let lu = self.data.clone().lu();
        let x = lu.solve(&rhs.data).ok_or(MatrixError::Singular)?;
        Matrix::new(x).map_err(|_| MatrixError::Singular)
    }

    pub fn solve_vec(&self, rhs: &CVector) -> Result<CVector, MatrixError> {
        let n = self.require_square()?;
        if rhs.len() != n {
            return Err(MatrixError::DimensionMismatch(format!("solve: {n}x{n} against vector of {}", rhs.len())));
        }
        let x = self.data.clone().lu().solve(rhs).ok_or(MatrixError::Singular)?;
        if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MatrixError::Singular);
        }
        Ok(x)
    }

    /// Solves `X · self = lhs`, i.e. `X = lhs · self⁻¹`, without forming the inverse.
    pub fn solve_right(&self, lhs: &Matrix) -> Result<Matrix, MatrixError> {
        let xt = self.transpose().solve(&lhs.transpose())?;
        Ok(xt.transpose())
    }

    pub fn inverse(&self) -> Result<Matrix, MatrixError> {
        self.solve(&Matrix::identity(self.require_square()?))
    }

    /// Largest magnitude strictly below the diagonal.
    pub fn strict_lower_max(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.cols() {
            for i in (j + 1)..self.rows() {
                worst = worst.max(self.data[(i, j)].norm());
            }
        }
        worst
    }

    pub fn is_upper_triangular(&self, tol: f64) -> bool {
        self.strict_lower_max() <= tol
    }

    /// Integer power for `k ≥ 0` by binary exponentiation.
    pub fn powi(&self, mut k: u64) -> Matrix {
        let n = self.rows();
        let mut base = self.data.clone();
        let mut acc = DMatrix::<Complex64>::identity(n, n);
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        Matrix::from_inner(acc)
    }

    /// `AB − BA`.
    pub fn commutator(&self, other: &Matrix) -> Matrix {
        Matrix::from_inner(&self.data * &other.data - &other.data * &self.data)
    }

    /// Max-abs distance to `other`.
    pub fn distance(&self, other: &Matrix) -> f64 {
        (&self.data - &other.data).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Copy of the block `[r0, r0+nr) × [c0, c0+nc)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Matrix {
        Matrix::from_inner(self.data.view((r0, c0), (nr, nc)).into_owned())
    }

    pub fn column(&self, j: usize) -> CVector {
        self.data.column(j).into_owned()
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix{:?}", self.to_rows())
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows() {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                let z = self.data[(i, j)];
                if z.im == 0.0 {
                    write!(f, "{}", z.re)?;
                } else {
                    write!(f, "{}{:+}i", z.re, z.im)?;
                }
            }
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Complex64;
    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.data[idx]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut Complex64 {
        &mut self.data[idx]
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Matrix> for &Matrix {
            type Output = Matrix;
            fn $method(self, rhs: &Matrix) -> Matrix {
                Matrix::from_inner(&self.data $op &rhs.data)
            }
        }
        impl $trait<Matrix> for Matrix {
            type Output = Matrix;
            fn $method(self, rhs: Matrix) -> Matrix {
                Matrix::from_inner(self.data $op rhs.data)
            }
        }
        impl $trait<&Matrix> for Matrix {
            type Output = Matrix;
            fn $method(self, rhs: &Matrix) -> Matrix {
                Matrix::from_inner(self.data $op &rhs.data)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        Matrix::from_inner(-&self.data)
    }
}

impl Neg for Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        Matrix::from_inner(-self.data)
    }
}

impl Mul<&CVector> for &Matrix {
    type Output = CVector;
    fn mul(self, rhs: &CVector) -> CVector {
        &self.data * rhs
    }
}

/// Max-abs norm of a complex vector.
pub fn vec_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn real_vector(values: &[f64]) -> CVector {
    CVector::from_iterator(values.len(), values.iter().map(|&x| Complex64::new(x, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_entries() {
        let err = Matrix::from_real_rows(&[vec![1.0, f64::NAN]]).unwrap_err();
        assert_eq!(err, MatrixError::NonFinite { row: 0, col: 1 });
        assert!(matches!(
            Matrix::from_real_rows(&[vec![1.0, 2.0], vec![3.0]]),
            Err(MatrixError::Ragged { row: 1, .. })
        ));
    }

    #[test]
    fn right_solve_matches_inverse() {
        let a = Matrix::from_real_rows(&[vec![2.0, 1.0], vec![0.5, 3.0]]).unwrap();
        let b = Matrix::from_real_rows(&[vec![1.0, -1.0], vec![4.0, 0.0]]).unwrap();
        let x = a.solve_right(&b).unwrap();
        assert!((&x * &a).distance(&b) < 1e-14);
        assert!(x.distance(&(&b * &a.inverse().unwrap())) < 1e-14);
    }

    #[test]
    fn singular_solve_reports_error() {
        let a = Matrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(a.inverse().unwrap_err(), MatrixError::Singular);
    }

    #[test]
    fn norms_and_powers() {
        let a = Matrix::from_real_rows(&[vec![1.0, -2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(a.norm_inf(), 7.0);
        assert_eq!(a.norm_one(), 6.0);
        assert!(a.powi(3).distance(&(&(&a * &a) * &a)) < 1e-12);
        assert!(a.powi(0).distance(&Matrix::identity(2)) == 0.0);
    }
}
