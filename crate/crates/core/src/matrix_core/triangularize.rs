//! Simultaneous upper triangularization of a matrix pair.
//!
//! Three routes, tried in order: a caller-supplied basis (validated, never
//! repaired), the identity when both matrices are already triangular, and
//! common-eigenvector deflation. Deflation is only attempted when the pair
//! commutes or its commutator is nilpotent; anything else is rejected.

use nalgebra::{DMatrix, QR, SVD};
use num_complex::Complex64;
use thiserror::Error;

use super::spectral::schur;
use super::{eigenvalues, Matrix, MatrixError};
use crate::tolerances::Tolerances;

type M = DMatrix<Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TriangularizeError {
    #[error("supplied T does not triangularize the pair: {0}")]
    UserTInvalid(String),
    #[error("A and B are not simultaneously triangularizable: {0}")]
    NotTriangularizable(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// `T⁻¹AT = Ā` and `T⁻¹BT = B̄`, both upper triangular.
#[derive(Debug, Clone)]
pub struct Triangularization {
    pub t: Matrix,
    pub a_bar: Matrix,
    pub b_bar: Matrix,
}

pub fn simultaneous_triangularize(
    a: &Matrix,
    b: &Matrix,
    user_t: Option<&Matrix>,
) -> Result<Triangularization, TriangularizeError> {
    simultaneous_triangularize_with(a, b, user_t, &Tolerances::DEFAULT)
}

pub fn simultaneous_triangularize_with(
    a: &Matrix,
    b: &Matrix,
    user_t: Option<&Matrix>,
    tol: &Tolerances,
) -> Result<Triangularization, TriangularizeError> {
    let n = a.require_square()?;
    if b.rows() != n || b.cols() != n {
        return Err(MatrixError::DimensionMismatch(format!("A is {n}x{n}, B is {}x{}", b.rows(), b.cols())).into());
    }
    let scale = 1.0f64.max(a.norm_inf()).max(b.norm_inf());

    if let Some(t) = user_t {
        if t.rows() != n || t.cols() != n {
            return Err(TriangularizeError::UserTInvalid(format!("T is {}x{}, expected {n}x{n}", t.rows(), t.cols())));
        }
        let a_bar = t.solve(&(a * t)).map_err(|_| TriangularizeError::UserTInvalid("T is singular".into()))?;
        let b_bar = t.solve(&(b * t)).map_err(|_| TriangularizeError::UserTInvalid("T is singular".into()))?;
        let worst = a_bar.strict_lower_max().max(b_bar.strict_lower_max());
        if worst > tol.triangular * scale {
            return Err(TriangularizeError::UserTInvalid(format!(
                "below-diagonal entry of magnitude {worst:e} exceeds {:e}",
                tol.triangular * scale
            )));
        }
        return Ok(Triangularization { t: t.clone(), a_bar, b_bar });
    }

    if a.is_upper_triangular(tol.triangular) && b.is_upper_triangular(tol.triangular) {
        return Ok(Triangularization { t: Matrix::identity(n), a_bar: a.clone(), b_bar: b.clone() });
    }

    let comm = a.commutator(b);
    let comm_norm = comm.norm_inf();
    if comm_norm > tol.commuting * scale {
        let power = comm.powi(n as u64).norm_inf();
        if power > tol.nilpotent * comm_norm.max(1.0).powi(n as i32) {
            return Err(TriangularizeError::NotTriangularizable(format!(
                "commutator AB − BA is not nilpotent (‖(AB − BA)^{n}‖ = {power:e})"
            )));
        }
    }

    let t = deflate(a.as_dmatrix(), b.as_dmatrix(), scale)?;
    let t = Matrix::from_inner(t);
    // T is unitary by construction
    let a_bar = &(&t.adjoint() * a) * &t;
    let b_bar = &(&t.adjoint() * b) * &t;
    let worst = a_bar.strict_lower_max().max(b_bar.strict_lower_max());
    if worst > tol.triangular * scale {
        return Err(TriangularizeError::NotTriangularizable(format!(
            "deflation left a below-diagonal residual of {worst:e}"
        )));
    }
    Ok(Triangularization { t, a_bar, b_bar })
}

/// Unitary `T` whose leading columns are successive common eigenvectors.
fn deflate(a: &M, b: &M, scale: f64) -> Result<M, TriangularizeError> {
    let n = a.nrows();
    if n == 1 {
        return Ok(M::identity(1, 1));
    }
    let v = common_eigenvector(a, b, scale)?;
    let u = unitary_with_first_column(&v);
    let a1 = u.adjoint() * a * &u;
    let b1 = u.adjoint() * b * &u;
    let sub = deflate(
        &a1.view((1, 1), (n - 1, n - 1)).into_owned(),
        &b1.view((1, 1), (n - 1, n - 1)).into_owned(),
        scale,
    )?;
    let mut embed = M::identity(n, n);
    embed.view_mut((1, 1), (n - 1, n - 1)).copy_from(&sub);
    Ok(u * embed)
}

fn unitary_with_first_column(v: &nalgebra::DVector<Complex64>) -> M {
    let n = v.len();
    let mut basis = M::zeros(n, n + 1);
    basis.set_column(0, v);
    for i in 0..n {
        basis[(i, i + 1)] = Complex64::new(1.0, 0.0);
    }
    QR::new(basis).q()
}

/// Orthonormal basis of the numerical null space of `m` (columns).
fn null_space(m: &M, tol: f64) -> M {
    let cols = m.ncols();
    let mut square = m.clone();
    if square.nrows() < cols {
        square = square.resize_vertically(cols, Complex64::new(0.0, 0.0));
    }
    let svd = SVD::new(square, false, true);
    let vt = svd.v_t.expect("requested V");
    let picked: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] <= tol).collect();
    let mut out = M::zeros(cols, picked.len());
    for (k, &i) in picked.iter().enumerate() {
        for j in 0..cols {
            out[(j, k)] = vt[(i, j)].conj();
        }
    }
    out
}

/// Finds `v` with `Av = λv` and `Bv = μv`.
///
/// For each eigenvalue of `A`, shrinks its eigenspace `V` to the largest
/// `B`-invariant subspace `W ⊆ V` (iterating `W ← {w ∈ W : Bw ∈ W}`); any
/// eigenvector of `B` restricted to a nonempty `W` is common.
fn common_eigenvector(a: &M, b: &M, scale: f64) -> Result<nalgebra::DVector<Complex64>, TriangularizeError> {
    let n = a.nrows();
    let rank_tol = 1e-7 * scale;
    let mut tried: Vec<Complex64> = Vec::new();
    for lambda in eigenvalues(&Matrix::from_inner(a.clone()))? {
        if tried.iter().any(|&l| (l - lambda).norm() < 1e-6 * scale) {
            continue;
        }
        tried.push(lambda);
        let shifted = a - M::identity(n, n) * lambda;
        let mut w = null_space(&shifted, rank_tol);
        while w.ncols() > 0 {
            let proj = M::identity(n, n) - &w * w.adjoint();
            let leak = proj * b * &w;
            let keep = null_space(&leak, rank_tol);
            if keep.ncols() == w.ncols() {
                break;
            }
            w = if keep.ncols() == 0 { M::zeros(n, 0) } else { &w * keep };
        }
        if w.ncols() == 0 {
            continue;
        }
        let restricted = w.adjoint() * b * &w;
        let form = schur(&Matrix::from_inner(restricted))?;
        let v = &w * form.q.column(0);
        let norm = v.norm();
        return Ok(v / Complex64::new(norm, 0.0));
    }
    Err(TriangularizeError::NotTriangularizable("no common eigenvector found".into()))
}
