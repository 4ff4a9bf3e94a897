//! Matrix exponential by scaling and squaring with Padé approximants.
//!
//! Degree selection follows Higham (2005): the smallest of the degrees
//! 3, 5, 7, 9 whose 1-norm threshold covers `‖A‖₁`, else degree 13 on
//! `A / 2^s`. The number of squarings is capped; past the cap the exponent is
//! treated as ill-posed rather than silently overflowing.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Matrix, MatrixError};
use crate::tolerances::Tolerances;

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_230e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17_297_280.0, 8_648_640.0, 1_995_840.0, 277_200.0, 25_200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

type M = DMatrix<Complex64>;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `e^{At}`.
pub fn expm(a: &Matrix, t: f64) -> Result<Matrix, MatrixError> {
    let n = a.require_square()?;
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    if t == 0.0 {
        return Ok(Matrix::identity(n));
    }
    let at = a.as_dmatrix() * c(t);
    if n == 1 {
        let z = at[(0, 0)].exp();
        return Matrix::new(DMatrix::from_element(1, 1, z)).map_err(|_| MatrixError::ExpOverflow {
            norm: at[(0, 0)].norm(),
            squarings: 0,
            cap: Tolerances::DEFAULT.max_squarings,
        });
    }
    exp_dense(at, Tolerances::DEFAULT.max_squarings)
}

/// Returns `(e^{Au}, (∫₀ᵘ e^{As} ds)·B)`.
///
/// Both blocks come out of one exponential of the `2p × 2p` matrix
/// `[[A, I], [0, 0]]·u`, whose upper-right block is the integral. No inverse
/// of `A` is needed, so singular `A` takes the same path as any other.
pub fn expm_integral(a: &Matrix, b: &Matrix, u: f64) -> Result<(Matrix, Matrix), MatrixError> {
    let n = a.require_square()?;
    if b.rows() != n || b.cols() != n {
        return Err(MatrixError::DimensionMismatch(format!(
            "expm_integral: A is {n}x{n}, B is {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    if u == 0.0 {
        return Ok((Matrix::identity(n), Matrix::zeros(n, n)));
    }
    let mut aug = M::zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a.as_dmatrix() * c(u)));
    for i in 0..n {
        aug[(i, n + i)] = c(u);
    }
    let e = exp_dense(aug, Tolerances::DEFAULT.max_squarings)?;
    let e = e.as_dmatrix();
    let exp_block = e.view((0, 0), (n, n)).into_owned();
    let integral = e.view((0, n), (n, n)).into_owned();
    Ok((Matrix::from_inner(exp_block), Matrix::from_inner(integral * b.as_dmatrix())))
}

fn norm1(m: &M) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn exp_dense(a: M, cap: u32) -> Result<Matrix, MatrixError> {
    let n = a.nrows();
    let norm = norm1(&a);
    let ident = M::identity(n, n);

    for &(m, theta) in &THETA {
        if norm <= theta {
            let (u, v) = pade_low(&a, &ident, m);
            return finish(u, v, 0, norm, cap);
        }
    }

    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i64 } else { 0 };
    if s > cap as i64 || !norm.is_finite() {
        return Err(MatrixError::ExpOverflow { norm, squarings: s.max(0) as u32, cap });
    }
    let s = s as u32;
    let scaled = &a * c(0.5f64.powi(s as i32));
    let (u, v) = pade13(&scaled, &ident);
    finish(u, v, s, norm, cap)
}

fn finish(u: M, v: M, squarings: u32, norm: f64, cap: u32) -> Result<Matrix, MatrixError> {
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or(MatrixError::Singular)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Matrix::new(r).map_err(|_| MatrixError::ExpOverflow { norm, squarings, cap })
}

fn pade_low(a: &M, ident: &M, m: usize) -> (M, M) {
    let b: &[f64] = match m {
        3 => &B3,
        5 => &B5,
        7 => &B7,
        _ => &B9,
    };
    let a2 = a * a;
    let mut powers = vec![ident.clone(), a2.clone()];
    while powers.len() <= m / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut odd = M::zeros(a.nrows(), a.ncols());
    let mut even = M::zeros(a.nrows(), a.ncols());
    for (k, pk) in powers.iter().enumerate() {
        odd += pk * c(b[2 * k + 1]);
        even += pk * c(b[2 * k]);
    }
    (a * odd, even)
}

fn pade13(a: &M, ident: &M) -> (M, M) {
    let b = &B13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let w1 = &a6 * c(b[13]) + &a4 * c(b[11]) + &a2 * c(b[9]);
    let w2 = &a6 * c(b[7]) + &a4 * c(b[5]) + &a2 * c(b[3]) + ident * c(b[1]);
    let u = a * (&a6 * w1 + w2);
    let z1 = &a6 * c(b[12]) + &a4 * c(b[10]) + &a2 * c(b[8]);
    let z2 = &a6 * c(b[6]) + &a4 * c(b[4]) + &a2 * c(b[2]) + ident * c(b[0]);
    let v = &a6 * z1 + z2;
    (u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn real(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_real_rows(rows).unwrap()
    }

    #[test]
    fn exponential_of_zero_is_identity() {
        let e = expm(&real(&[vec![0.0]]), 1.0).unwrap();
        assert_eq!(e[(0, 0)], c(1.0));
        let a = real(&[vec![3.0, 1.0], vec![-2.0, 0.5]]);
        assert_eq!(expm(&a, 0.0).unwrap(), Matrix::identity(2));
    }

    #[test]
    fn scalar_decay() {
        let e = expm(&real(&[vec![-1.0]]), 1.0).unwrap();
        assert!((e[(0, 0)].re - (-1.0f64).exp()).abs() < 1e-10);
        assert!((e[(0, 0)].re - 0.367_879_44).abs() < 1e-8);
    }

    #[test]
    fn nilpotent_series_terminates() {
        let e = expm(&real(&[vec![0.0, 1.0], vec![0.0, 0.0]]), 2.0).unwrap();
        assert!(e.distance(&real(&[vec![1.0, 2.0], vec![0.0, 1.0]])) < 1e-14);
    }

    #[test]
    fn rotation_generator_and_large_norm() {
        // e^{θJ} is a rotation; θ = 7 forces the degree-13 branch with squaring.
        let j = real(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
        let e = expm(&j, 7.0).unwrap();
        let (s, co) = 7.0f64.sin_cos();
        assert!(e.distance(&real(&[vec![co, -s], vec![s, co]])) < 1e-12);
        // diagonal with mixed scales
        let d = real(&[vec![-3.0, 0.0], vec![0.0, 2.5]]);
        let e = expm(&d, 4.0).unwrap();
        assert!((e[(0, 0)].re - (-12.0f64).exp()).abs() < 1e-18);
        assert!((e[(1, 1)].re / 10.0f64.exp() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn overflow_cap() {
        let a = real(&[vec![1e14, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(expm(&a, 1.0), Err(MatrixError::ExpOverflow { .. })));
    }

    #[test]
    fn integral_block_examples() {
        let (e, w) = expm_integral(&Matrix::zeros(2, 2), &Matrix::identity(2), 1.0).unwrap();
        assert!(e.distance(&Matrix::identity(2)) < 1e-15);
        assert!(w.distance(&Matrix::identity(2)) < 1e-15);

        let (e, w) = expm_integral(&real(&[vec![-1.0]]), &real(&[vec![1.0]]), 1.0).unwrap();
        assert!((e[(0, 0)].re - (-1.0f64).exp()).abs() < 1e-12);
        assert!((w[(0, 0)].re - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!((w[(0, 0)].re - 0.632_120_56).abs() < 1e-8);

        let a = real(&[vec![0.3, 2.0], vec![-1.0, 0.1]]);
        let (e, w) = expm_integral(&a, &a, 0.0).unwrap();
        assert_eq!(e, Matrix::identity(2));
        assert_eq!(w, Matrix::zeros(2, 2));
    }

    fn small_matrix(n: usize) -> impl Strategy<Value = Matrix> {
        prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
            let rows: Vec<Vec<f64>> = v.chunks(n).map(|r| r.to_vec()).collect();
            let m = Matrix::from_real_rows(&rows).unwrap();
            // keep ‖A‖ ≤ 2
            let norm = m.norm_inf().max(1e-12);
            if norm > 2.0 { m.scale_real(2.0 / norm) } else { m }
        })
    }

    proptest! {
        #[test]
        fn semigroup_property(a in small_matrix(3), s in -2.0f64..2.0, t in -2.0f64..2.0) {
            let lhs = &expm(&a, s).unwrap() * &expm(&a, t).unwrap();
            let rhs = expm(&a, s + t).unwrap();
            prop_assert!(lhs.distance(&rhs) < 1e-8);
        }

        #[test]
        fn integral_derivative_matches_integrand(a in small_matrix(2), b in small_matrix(2), u in 0.1f64..2.0) {
            let h = 1e-4;
            let (_, plus) = expm_integral(&a, &b, u + h).unwrap();
            let (_, minus) = expm_integral(&a, &b, u - h).unwrap();
            let derivative = (plus - minus).scale_real(0.5 / h);
            let expected = &expm(&a, u).unwrap() * &b;
            prop_assert!(derivative.distance(&expected) < 1e-6);
        }
    }
}
