//! Eigenvalues and dichotomy projections from an ordered complex Schur form.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use super::{Matrix, MatrixError};
use crate::tolerances::Tolerances;

type M = DMatrix<Complex64>;

const SCHUR_MAX_ITER: usize = 10_000;

/// Which boundary separates the stable from the unstable spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Stable means `Re λ < 0`.
    Continuous,
    /// Stable means `|λ| < 1`.
    Discrete,
}

impl SplitMode {
    /// Signed distance to the boundary; negative on the stable side.
    fn signed_margin(self, lambda: Complex64) -> f64 {
        match self {
            SplitMode::Continuous => lambda.re,
            SplitMode::Discrete => lambda.norm().ln(),
        }
    }
}

/// Complementary spectral projections of a hyperbolic matrix.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub mode: SplitMode,
    /// Projection onto the stable invariant subspace along the unstable one.
    pub stable_projection: Matrix,
    pub unstable_projection: Matrix,
    pub stable_eigenvalues: Vec<Complex64>,
    pub unstable_eigenvalues: Vec<Complex64>,
    /// `min |Re λ|` (continuous) or `min |ln|λ||` (discrete) over the stable
    /// cluster; `+∞` when the cluster is empty.
    pub decay_rate_stable: f64,
    pub decay_rate_unstable: f64,
}

impl SpectralSplit {
    /// Smallest of the two decay rates.
    pub fn decay_rate(&self) -> f64 {
        self.decay_rate_stable.min(self.decay_rate_unstable)
    }
}

pub(crate) struct SchurForm {
    /// Unitary factor: `A = Q T Qᴴ`.
    pub q: M,
    pub t: M,
}

pub(crate) fn schur(a: &Matrix) -> Result<SchurForm, MatrixError> {
    a.require_square()?;
    let s = Schur::try_new(a.as_dmatrix().clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or(MatrixError::NonConvergence)?;
    let (q, mut t) = s.unpack();
    let n = t.nrows();
    // the complex Schur form is triangular; clear rounding noise below the diagonal
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok(SchurForm { q, t })
}

/// All eigenvalues with multiplicity, in Schur diagonal order.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex64>, MatrixError> {
    let n = a.require_square()?;
    if n == 1 {
        return Ok(vec![a[(0, 0)]]);
    }
    if a.is_upper_triangular(0.0) {
        return Ok(a.diagonal());
    }
    let f = schur(a)?;
    Ok((0..n).map(|i| f.t[(i, i)]).collect())
}

/// Swaps the adjacent diagonal entries `k` and `k + 1` of the triangular
/// factor with a unitary rotation, updating `Q` to match.
fn swap_adjacent(form: &mut SchurForm, k: usize) {
    let n = form.t.nrows();
    let a = form.t[(k, k)];
    let b = form.t[(k + 1, k + 1)];
    let c = form.t[(k, k + 1)];
    // eigenvector of the 2×2 block for eigenvalue b
    let v1 = c;
    let v2 = b - a;
    let r = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
    if r == 0.0 {
        return;
    }
    let (v1, v2) = (v1 / r, v2 / r);
    // G = [[v1, -conj(v2)], [v2, conj(v1)]]
    let g = [[v1, -v2.conj()], [v2, v1.conj()]];

    // T ← Gᴴ T on rows k, k+1
    for j in 0..n {
        let x = form.t[(k, j)];
        let y = form.t[(k + 1, j)];
        form.t[(k, j)] = g[0][0].conj() * x + g[1][0].conj() * y;
        form.t[(k + 1, j)] = g[0][1].conj() * x + g[1][1].conj() * y;
    }
    // T ← T G and Q ← Q G on columns k, k+1
    for mat in [&mut form.t, &mut form.q] {
        for i in 0..n {
            let x = mat[(i, k)];
            let y = mat[(i, k + 1)];
            mat[(i, k)] = x * g[0][0] + y * g[1][0];
            mat[(i, k + 1)] = x * g[0][1] + y * g[1][1];
        }
    }
    form.t[(k + 1, k)] = Complex64::new(0.0, 0.0);
}

/// Reorders the Schur form so every eigenvalue satisfying `is_first` comes
/// first. Returns the size of the leading cluster.
pub(crate) fn reorder_schur(form: &mut SchurForm, is_first: impl Fn(Complex64) -> bool) -> usize {
    let n = form.t.nrows();
    let mut placed = 0;
    for i in 0..n {
        if is_first(form.t[(i, i)]) {
            let mut k = i;
            while k > placed {
                swap_adjacent(form, k - 1);
                k -= 1;
            }
            placed += 1;
        }
    }
    placed
}

/// Solves `T11 Y − Y T22 = rhs` for upper-triangular `T11`, `T22` with disjoint spectra.
fn triangular_sylvester(t11: &M, t22: &M, rhs: &M) -> M {
    let k = t11.nrows();
    let m = t22.nrows();
    let mut y = M::zeros(k, m);
    for j in 0..m {
        // (T11 − t22[j,j] I) y_j = rhs_j + Σ_{l<j} y_l t22[l,j]
        let mut col: Vec<Complex64> = (0..k).map(|i| rhs[(i, j)]).collect();
        for l in 0..j {
            let w = t22[(l, j)];
            for i in 0..k {
                col[i] += y[(i, l)] * w;
            }
        }
        let shift = t22[(j, j)];
        for i in (0..k).rev() {
            let mut acc = col[i];
            for l in (i + 1)..k {
                acc -= t11[(i, l)] * y[(l, j)];
            }
            y[(i, j)] = acc / (t11[(i, i)] - shift);
        }
    }
    y
}

pub fn spectral_split(m: &Matrix, mode: SplitMode) -> Result<SpectralSplit, MatrixError> {
    spectral_split_with(m, mode, &Tolerances::DEFAULT)
}

/// Stable/unstable projections of `m` for the given boundary.
pub fn spectral_split_with(m: &Matrix, mode: SplitMode, tol: &Tolerances) -> Result<SpectralSplit, MatrixError> {
    let n = m.require_square()?;
    let mut form = schur(m)?;
    for i in 0..n {
        let lambda = form.t[(i, i)];
        if mode.signed_margin(lambda).abs() < tol.boundary_margin {
            return Err(MatrixError::BoundaryEigenvalue { eigenvalue: lambda, margin: tol.boundary_margin });
        }
    }
    let k = reorder_schur(&mut form, |l| mode.signed_margin(l) < 0.0);
    let diag: Vec<Complex64> = (0..n).map(|i| form.t[(i, i)]).collect();
    let stable_eigenvalues = diag[..k].to_vec();
    let unstable_eigenvalues = diag[k..].to_vec();

    // In Schur coordinates the stable projector is [[I, −Y], [0, 0]] with
    // T11 Y − Y T22 = −T12.
    let mut p_schur = M::zeros(n, n);
    for i in 0..k {
        p_schur[(i, i)] = Complex64::new(1.0, 0.0);
    }
    if k > 0 && k < n {
        let t11 = form.t.view((0, 0), (k, k)).into_owned();
        let t22 = form.t.view((k, k), (n - k, n - k)).into_owned();
        let t12 = form.t.view((0, k), (k, n - k)).into_owned();
        let y = triangular_sylvester(&t11, &t22, &(-t12));
        p_schur.view_mut((0, k), (k, n - k)).copy_from(&(-y));
    }
    let p = &form.q * p_schur * form.q.adjoint();
    let stable_projection = Matrix::new(p).map_err(|_| MatrixError::Singular)?;
    let unstable_projection = &Matrix::identity(n) - &stable_projection;

    let rate = |ls: &[Complex64]| ls.iter().map(|&l| mode.signed_margin(l).abs()).fold(f64::INFINITY, f64::min);
    Ok(SpectralSplit {
        mode,
        decay_rate_stable: rate(&stable_eigenvalues),
        decay_rate_unstable: rate(&unstable_eigenvalues),
        stable_projection,
        unstable_projection,
        stable_eigenvalues,
        unstable_eigenvalues,
    })
}
