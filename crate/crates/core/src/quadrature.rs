//! Adaptive Gauss–Legendre quadrature for complex vector integrands.

use std::collections::BinaryHeap;

use num_complex::Complex64;
use thiserror::Error;

use crate::matrix_core::{vec_norm, CVector};

const NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_3,
    0.219_086_362_515_982_0,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Default cap on the number of subintervals in [`integrate`].
pub const MAX_INTERVALS: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("quadrature on [{a}, {b}] did not reach tolerance {tol:e} with {intervals} subintervals (estimate {estimate:e})")]
pub struct QuadratureError {
    pub a: f64,
    pub b: f64,
    pub tol: f64,
    pub intervals: usize,
    /// Error estimate when refinement stopped.
    pub estimate: f64,
}

/// Ten-point Gauss–Legendre rule on `[a, b]`. Nodes are strictly interior,
/// so integrands with jumps at the endpoints are sampled from the inside.
pub fn gauss_legendre<F>(f: &F, a: f64, b: f64, dim: usize) -> CVector
where
    F: Fn(f64) -> CVector + ?Sized,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = CVector::zeros(dim);
    for (x, w) in NODES.iter().zip(WEIGHTS.iter()) {
        let plus = f(mid + half * x);
        let minus = f(mid - half * x);
        acc += (plus + minus) * Complex64::new(w * half, 0.0);
    }
    acc
}

/// Subinterval with its two-panel estimate and the error against one panel.
struct Panel {
    a: f64,
    b: f64,
    /// Two panels on the halves.
    fine: CVector,
    err: f64,
}

impl Panel {
    fn new<F>(f: &F, a: f64, b: f64, dim: usize, coarse: CVector) -> Self
    where
        F: Fn(f64) -> CVector + ?Sized,
    {
        let mid = 0.5 * (a + b);
        let fine = gauss_legendre(f, a, mid, dim) + gauss_legendre(f, mid, b, dim);
        let err = vec_norm(&(&fine - &coarse));
        Self { a, b, fine, err }
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// `∫_a^b f` to absolute tolerance `tol` (max-abs norm).
///
/// Globally adaptive: the subinterval with the largest error estimate is
/// bisected until the summed estimate is below `tol` or rounding level.
pub fn integrate<F>(f: &F, a: f64, b: f64, dim: usize, tol: f64) -> Result<CVector, QuadratureError>
where
    F: Fn(f64) -> CVector + ?Sized,
{
    integrate_limited(f, a, b, dim, tol, MAX_INTERVALS)
}

/// [`integrate`] with an explicit cap on the number of subintervals.
pub fn integrate_limited<F>(
    f: &F,
    a: f64,
    b: f64,
    dim: usize,
    tol: f64,
    max_intervals: usize,
) -> Result<CVector, QuadratureError>
where
    F: Fn(f64) -> CVector + ?Sized,
{
    if a == b {
        return Ok(CVector::zeros(dim));
    }
    // narrowest subinterval still worth bisecting
    let min_width = 1e-13 * (b - a).abs();
    let mut heap = BinaryHeap::new();
    let first = Panel::new(f, a, b, dim, gauss_legendre(f, a, b, dim));
    let (mut err, mut magnitude) = (first.err, vec_norm(&first.fine));
    heap.push(first);
    loop {
        let converged = |err: f64, magnitude: f64| err <= tol || err <= 8.0 * f64::EPSILON * magnitude;
        if converged(err, magnitude) {
            // running sums drift; confirm with exact ones
            err = heap.iter().map(|p| p.err).sum();
            magnitude = heap.iter().map(|p| vec_norm(&p.fine)).sum();
            if converged(err, magnitude) {
                break;
            }
        }
        let worst = heap.peek().expect("heap is never empty");
        if heap.len() >= max_intervals || (worst.b - worst.a).abs() <= min_width {
            return Err(QuadratureError { a, b, tol, intervals: heap.len(), estimate: err });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        // the halves of `fine` become the coarse estimates one level down
        let left = gauss_legendre(f, worst.a, mid, dim);
        let right = &worst.fine - &left;
        let (l, r) = (Panel::new(f, worst.a, mid, dim, left), Panel::new(f, mid, worst.b, dim, right));
        err += l.err + r.err - worst.err;
        magnitude += vec_norm(&l.fine) + vec_norm(&r.fine) - vec_norm(&worst.fine);
        heap.push(l);
        heap.push(r);
    }
    // sum in interval order so the result does not depend on heap layout
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    Ok(panels.iter().fold(CVector::zeros(dim), |acc, p| acc + &p.fine))
}

/// `∫_a^b f` split at every integer inside `(a, b)`.
pub fn integrate_split_at_integers<F>(f: &F, a: f64, b: f64, dim: usize, tol: f64) -> Result<CVector, QuadratureError>
where
    F: Fn(f64) -> CVector + ?Sized,
{
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let pieces = integer_breakpoints(lo, hi);
    let per_piece = tol / (pieces.len().max(2) - 1) as f64;
    let mut acc = CVector::zeros(dim);
    for w in pieces.windows(2) {
        acc += integrate(f, w[0], w[1], dim, per_piece)?;
    }
    Ok(acc * Complex64::new(sign, 0.0))
}

/// `[lo, ⌈lo⌉, …, ⌊hi⌋, hi]` with duplicates removed.
pub fn integer_breakpoints(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = vec![lo];
    let mut k = lo.floor() + 1.0;
    while k < hi {
        out.push(k);
        k += 1.0;
    }
    if hi > lo {
        out.push(hi);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(z: Complex64) -> CVector {
        CVector::from_element(1, z)
    }

    #[test]
    fn polynomial_is_exact() {
        let f = |t: f64| scalar(Complex64::new(t.powi(7) - 3.0 * t * t, 0.0));
        let got = gauss_legendre(&f, -1.0, 2.0, 1)[0].re;
        let exact = (2.0f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((got - exact).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_integrand_converges() {
        let f = |t: f64| scalar(Complex64::new(0.0, 40.0 * t).exp());
        let got = integrate(&f, 0.0, 3.0, 1, 1e-12).unwrap()[0];
        let exact = (Complex64::new(0.0, 120.0).exp() - 1.0) / Complex64::new(0.0, 40.0);
        assert!((got - exact).norm() < 1e-11);
    }

    #[test]
    fn jumps_at_integers_are_respected() {
        // floor(t) on [-0.5, 2.5]: -1·0.5 + 0 + 1 + 2·0.5 = 1.5
        let f = |t: f64| scalar(Complex64::new(t.floor(), 0.0));
        let got = integrate_split_at_integers(&f, -0.5, 2.5, 1, 1e-12).unwrap()[0].re;
        assert!((got - 1.5).abs() < 1e-13);
        let rev = integrate_split_at_integers(&f, 2.5, -0.5, 1, 1e-12).unwrap()[0].re;
        assert!((rev + 1.5).abs() < 1e-13);
    }

    #[test]
    fn non_convergence_is_reported() {
        let f = |t: f64| scalar(Complex64::new(0.0, 1e6 * t).exp());
        let err = integrate_limited(&f, 0.0, 1.0, 1, 1e-12, 50).unwrap_err();
        assert_eq!(err.intervals, 50);
        assert!(err.estimate > 1e-12);
    }

    #[test]
    fn interior_jump_reaches_rounding_level() {
        let f = |t: f64| scalar(Complex64::new(if t < 0.3 { 0.0 } else { 1.0 }, 0.0));
        let got = integrate(&f, 0.0, 1.0, 1, 1e-13).unwrap()[0].re;
        assert!((got - 0.7).abs() < 1e-12);
    }

    #[test]
    fn localized_fast_oscillation() {
        // sin(1/(d + s²)) with d = 2.5e-4 oscillates thousands of times near 0
        let f = |t: f64| scalar(Complex64::new((1.0 / (2.5e-4 + t * t)).sin(), 0.0));
        let fine = integrate(&f, -0.5, 0.5, 1, 1e-12).unwrap()[0].re;
        let coarse = integrate(&f, -0.5, 0.5, 1, 1e-9).unwrap()[0].re;
        assert!((fine - coarse).abs() < 2e-9);
    }

    #[test]
    fn breakpoints() {
        assert_eq!(integer_breakpoints(-0.5, 2.0), vec![-0.5, 0.0, 1.0, 2.0]);
        assert_eq!(integer_breakpoints(1.0, 1.5), vec![1.0, 1.5]);
    }
}
