//! Screen for invertibility of `Z(τ + u, τ)` on triangular spectra.
//!
//! For eigenvalue pairs `(λ_A, λ_B)` the diagonal entry of `Z` is
//! `e^{λ_A u}·(1 + λ_B·(1 − e^{−uλ_A})/λ_A)`, which vanishes exactly when the
//! bracket does. The quotient is evaluated as `u·φ(−uλ_A)` with
//! `φ(z) = (e^z − 1)/z`, so `λ_A = 0` reduces to `λ_B·u` without a branch.

use num_complex::Complex64;

use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EigenCondition {
    Pass,
    /// The expression equals −1 at `u` (within the root tolerance).
    Fail { u: f64 },
}

impl EigenCondition {
    pub fn passed(&self) -> bool {
        matches!(self, EigenCondition::Pass)
    }
}

const SCAN_POINTS: usize = 4001;

fn phi(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        // 1 + z/2 + z²/6 + z³/24 + z⁴/120
        Complex64::new(1.0, 0.0) + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0)))
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `(λ_B/λ_A)(1 − e^{−uλ_A})`, or `λ_B·u` when `λ_A = 0`.
pub fn eigen_expression(lambda_a: Complex64, lambda_b: Complex64, u: f64) -> Complex64 {
    lambda_b * u * phi(-lambda_a * u)
}

/// Checks that [`eigen_expression`] never equals −1 for `u ∈ [0, 1]`.
pub fn check_eigen_condition(lambda_a: Complex64, lambda_b: Complex64) -> EigenCondition {
    let tol = Tolerances::DEFAULT;
    let g = |u: f64| eigen_expression(lambda_a, lambda_b, u) + 1.0;
    let grid: Vec<f64> = (0..SCAN_POINTS).map(|k| k as f64 / (SCAN_POINTS - 1) as f64).collect();

    if lambda_a.im == 0.0 && lambda_b.im == 0.0 {
        // g is real and monotone in u (its derivative is λ_B e^{−uλ_A}), so a
        // sign change on the grid brackets the only possible root.
        let mut prev = g(0.0).re;
        for w in grid.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let val = g(hi).re;
            if val == 0.0 {
                return EigenCondition::Fail { u: hi };
            }
            if prev.signum() != val.signum() {
                return EigenCondition::Fail { u: bisect(|u| g(u).re, lo, hi, tol.eigen_root) };
            }
            prev = val;
        }
        return EigenCondition::Pass;
    }

    // Complex case: look for a zero of |g| among the grid's local minima.
    let mags: Vec<f64> = grid.iter().map(|&u| g(u).norm()).collect();
    let scale = 1.0 + lambda_b.norm();
    for i in 0..grid.len() {
        let left = if i == 0 { f64::INFINITY } else { mags[i - 1] };
        let right = if i + 1 == grid.len() { f64::INFINITY } else { mags[i + 1] };
        if mags[i] <= left && mags[i] <= right {
            let lo = grid[i.saturating_sub(1)];
            let hi = grid[(i + 1).min(grid.len() - 1)];
            let u = golden_min(|u| g(u).norm(), lo, hi, tol.eigen_root);
            if g(u).norm() <= 1e-9 * scale {
                return EigenCondition::Fail { u };
            }
        }
    }
    EigenCondition::Pass
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let flo = f(lo);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let r = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > width {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    [lo, mid, hi].into_iter().min_by(|a, b| f(*a).partial_cmp(&f(*b)).unwrap()).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn zero_a_negative_unit_b_fails_at_one() {
        match check_eigen_condition(re(0.0), re(-1.0)) {
            EigenCondition::Fail { u } => assert!((u - 1.0).abs() < 1e-10),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn passing_examples() {
        assert!(check_eigen_condition(re(0.0), re(1.0)).passed());
        assert!(check_eigen_condition(re(1.0), re(0.0)).passed());
        assert!(check_eigen_condition(re(-1.0), re(1.0)).passed());
    }

    #[test]
    fn interior_root_located() {
        // λ_A = 0, λ_B = −2: root at u = 1/2
        match check_eigen_condition(re(0.0), re(-2.0)) {
            EigenCondition::Fail { u } => assert!((u - 0.5).abs() < 1e-11),
            other => panic!("{other:?}"),
        }
        // λ_A = 1, λ_B = −3: 3(1 − e^{−u}) = 1 → u = ln 1.5
        match check_eigen_condition(re(1.0), re(-3.0)) {
            EigenCondition::Fail { u } => assert!((u - 1.5f64.ln()).abs() < 1e-11),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn complex_root_located() {
        // λ_A = i with λ_B chosen so that the expression hits −1 at u = 0.4
        let la = Complex64::new(0.0, 1.0);
        let u0 = 0.4;
        let lb = -1.0 / (u0 * phi(-la * u0));
        match check_eigen_condition(la, lb) {
            EigenCondition::Fail { u } => assert!((u - u0).abs() < 1e-7, "u = {u}"),
            other => panic!("{other:?}"),
        }
        assert!(check_eigen_condition(la, Complex64::new(0.0, 1.0)).passed());
    }

    #[test]
    fn small_lambda_a_is_continuous_with_zero_branch() {
        let a = eigen_expression(re(1e-12), re(-0.7), 0.8);
        let b = eigen_expression(re(0.0), re(-0.7), 0.8);
        assert!((a - b).norm() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn agrees_with_brute_force_scan(la in -3.0f64..3.0, lb in -4.0f64..4.0) {
            let n = 100_000;
            let g = |u: f64| eigen_expression(re(la), re(lb), u).re + 1.0;
            let mut brute = false;
            let mut prev = g(0.0);
            for k in 1..=n {
                let v = g(k as f64 / n as f64);
                if v == 0.0 || v.signum() != prev.signum() { brute = true; break; }
                prev = v;
            }
            let verdict = check_eigen_condition(re(la), re(lb));
            prop_assert_eq!(brute, !verdict.passed());
            if let EigenCondition::Fail { u } = verdict {
                prop_assert!(g(u).abs() < 1e-9);
            }
        }
    }
}
