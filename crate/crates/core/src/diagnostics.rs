//! Finite-window screens for periodicity, almost periods, integer shift
//! limits and Lipschitz moduli. Every verdict is relative to the window and
//! grid it reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::depca_engine::HybridTrajectory;
use crate::matrix_core::{vec_norm, CVector};
use crate::signals::{ForcingSignal, ShiftSequence};

/// Grid step of the periodicity check.
pub const PERIODICITY_GRID: f64 = 1e-3;
/// Offset of the sample points placed on both sides of every integer.
pub const STRADDLE: f64 = 1e-9;
/// Step of the shift grid when real shifts are scanned.
pub const REAL_SHIFT_STEP: f64 = 0.05;
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("window of length {available} is too small; need at least {needed}")]
    WindowTooSmall { needed: f64, available: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Anything that can be sampled on (part of) the real line.
pub trait Observable {
    fn dim(&self) -> usize;
    fn value(&self, t: f64) -> CVector;
    /// Closed interval of definition; `None` for the whole line.
    fn domain(&self) -> Option<(f64, f64)>;
}

impl Observable for ForcingSignal {
    fn dim(&self) -> usize {
        ForcingSignal::dim(self)
    }

    fn value(&self, t: f64) -> CVector {
        self.evaluate(t)
    }

    fn domain(&self) -> Option<(f64, f64)> {
        None
    }
}

impl Observable for HybridTrajectory {
    fn dim(&self) -> usize {
        HybridTrajectory::dim(self)
    }

    fn value(&self, t: f64) -> CVector {
        self.evaluate(t).expect("sample points lie in the domain")
    }

    fn domain(&self) -> Option<(f64, f64)> {
        Some(HybridTrajectory::domain(self))
    }
}

fn clip(x: &dyn Observable, window: (f64, f64)) -> (f64, f64) {
    match x.domain() {
        Some((lo, hi)) => (window.0.max(lo), window.1.min(hi)),
        None => window,
    }
}

/// Uniform grid of `[lo, hi]` plus `n ± STRADDLE` for every integer inside.
fn sample_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step).floor() as usize;
    let mut pts: Vec<f64> = (0..=count).map(|k| lo + k as f64 * step).collect();
    let mut n = lo.ceil();
    while n <= hi {
        for t in [n - STRADDLE, n + STRADDLE] {
            if t >= lo && t <= hi {
                pts.push(t);
            }
        }
        n += 1.0;
    }
    pts
}

fn sup_shift_deviation(x: &dyn Observable, grid: &[f64], shift: f64) -> (f64, f64) {
    let mut worst = 0.0;
    let mut at = f64::NAN;
    for &t in grid {
        let d = vec_norm(&(x.value(t + shift) - x.value(t)));
        if d > worst || at.is_nan() {
            worst = d.max(worst);
            at = t;
        }
    }
    (worst, at)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicityReport {
    pub period: f64,
    /// `sup |x(t + period) − x(t)|` over the grid.
    pub deviation: f64,
    pub worst_at: f64,
    pub window: (f64, f64),
    pub points: usize,
    pub tol: f64,
    pub passed: bool,
}

/// Sup of `|x(t + p0/q0) − x(t)|` on `window` (clipped to the domain).
pub fn periodicity_check(
    x: &dyn Observable,
    period: (i64, i64),
    tol: f64,
    window: (f64, f64),
) -> Result<PeriodicityReport, DiagnosticsError> {
    let (p0, q0) = period;
    if p0 <= 0 || q0 <= 0 {
        return Err(DiagnosticsError::InvalidArgument(format!("period {p0}/{q0} must be positive")));
    }
    let w = p0 as f64 / q0 as f64;
    let (lo, hi) = clip(x, window);
    if hi - lo < 2.0 * w {
        return Err(DiagnosticsError::WindowTooSmall { needed: 2.0 * w, available: (hi - lo).max(0.0) });
    }
    let grid = sample_grid(lo, hi - w, PERIODICITY_GRID);
    let (deviation, worst_at) = sup_shift_deviation(x, &grid, w);
    Ok(PeriodicityReport { period: w, deviation, worst_at, window: (lo, hi), points: grid.len(), tol, passed: deviation < tol })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlmostPeriodReport {
    pub epsilon: f64,
    pub tested_shifts: Vec<f64>,
    pub passing_shifts: Vec<f64>,
    /// Sup deviation per tested shift, aligned with `tested_shifts`.
    pub deviations: Vec<f64>,
    pub window_radius: f64,
    pub grid_step: f64,
    /// Passing shifts per unit length of the scanned shift range.
    pub density: f64,
}

/// ε-almost periods among shifts in `[−shift_range, shift_range] \ {0}`,
/// judged by the sup deviation on `[−radius, radius]`.
pub fn almost_period_scan(
    f: &dyn Observable,
    epsilon: f64,
    shift_range: i64,
    integer_shifts_only: bool,
    radius: f64,
    grid_step: f64,
) -> Result<AlmostPeriodReport, DiagnosticsError> {
    if shift_range < 1 || !(radius > 0.0) || !(grid_step > 0.0) {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "need shift_range ≥ 1, radius > 0, grid_step > 0; got {shift_range}, {radius}, {grid_step}"
        )));
    }
    let tested_shifts: Vec<f64> = if integer_shifts_only {
        (-shift_range..=shift_range).filter(|&s| s != 0).map(|s| s as f64).collect()
    } else {
        let per_side = (shift_range as f64 / REAL_SHIFT_STEP).round() as i64;
        (-per_side..=per_side).filter(|&k| k != 0).map(|k| k as f64 * REAL_SHIFT_STEP).collect()
    };
    let (lo, hi) = clip(f, (-radius, radius));
    let mut deviations = Vec::with_capacity(tested_shifts.len());
    let mut passing_shifts = Vec::new();
    for &s in &tested_shifts {
        // only points where both t and t + s are in the domain count
        let (a, b) = match f.domain() {
            Some((dlo, dhi)) => (lo.max(dlo - s), hi.min(dhi - s)),
            None => (lo, hi),
        };
        let dev = if b >= a { sup_shift_deviation(f, &sample_grid(a, b, grid_step), s).0 } else { f64::NAN };
        if dev < epsilon {
            passing_shifts.push(s);
        }
        deviations.push(dev);
    }
    let density = passing_shifts.len() as f64 / (2 * shift_range) as f64;
    Ok(AlmostPeriodReport { epsilon, tested_shifts, passing_shifts, deviations, window_radius: radius, grid_step, density })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftLimitProfile {
    pub t: f64,
    /// `(k, max_{m,n ≥ k} |f(t + s_m) − f(t + s_n)|)` for `k` over the last
    /// half of the shift list.
    pub tail_deviations: Vec<(usize, f64)>,
}

impl ShiftLimitProfile {
    /// Deviation over the whole last half.
    pub fn cauchy_deviation(&self) -> f64 {
        self.tail_deviations.first().map(|d| d.1).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftLimitReport {
    pub shifts: Vec<i64>,
    pub profiles: Vec<ShiftLimitProfile>,
}

impl ShiftLimitReport {
    pub fn max_deviation(&self) -> f64 {
        self.profiles.iter().map(|p| p.cauchy_deviation()).fold(0.0, f64::max)
    }
}

/// Cauchy screen for `lim_n f(t + s_n)` at each probe point.
pub fn shift_limit_probe(
    f: &dyn Observable,
    shifts: &ShiftSequence,
    probe_points: &[f64],
) -> Result<ShiftLimitReport, DiagnosticsError> {
    if shifts.is_empty() {
        return Err(DiagnosticsError::InvalidArgument("shift sequence is empty".into()));
    }
    let len = shifts.len();
    let start = len / 2;
    let mut profiles = Vec::with_capacity(probe_points.len());
    for &t in probe_points {
        let values: Vec<CVector> = shifts.entries.iter().map(|&s| f.value(t + s as f64)).collect();
        let mut tail_deviations = Vec::with_capacity(len - start);
        for k in start..len {
            let mut worst: f64 = 0.0;
            for m in k..len {
                for n in (m + 1)..len {
                    worst = worst.max(vec_norm(&(&values[m] - &values[n])));
                }
            }
            tail_deviations.push((k, worst));
        }
        profiles.push(ShiftLimitProfile { t, tail_deviations });
    }
    Ok(ShiftLimitReport { shifts: shifts.entries.clone(), profiles })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    pub m0: f64,
    pub samples: usize,
    pub seed: u64,
    pub window: (f64, f64),
    /// Largest `|x(t) − x(s)| / |t − s|` seen.
    pub worst_ratio: f64,
    /// Largest `|x(t) − x(s)| − M0·|t − s|`.
    pub worst_excess: f64,
    pub passed: bool,
}

/// Tests `|x(t) − x(s)| ≤ M0·|t − s| + 1e−9` on seeded random pairs.
pub fn lipschitz_probe(
    x: &dyn Observable,
    m0: f64,
    samples: usize,
    seed: u64,
    window: (f64, f64),
) -> Result<LipschitzReport, DiagnosticsError> {
    if samples < 100 {
        return Err(DiagnosticsError::InvalidArgument(format!("need at least 100 samples, got {samples}")));
    }
    let (lo, hi) = clip(x, window);
    if !(hi > lo) {
        return Err(DiagnosticsError::WindowTooSmall { needed: f64::MIN_POSITIVE, available: (hi - lo).max(0.0) });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_excess = f64::NEG_INFINITY;
    for _ in 0..samples {
        let t = rng.gen_range(lo..=hi);
        let s = rng.gen_range(lo..=hi);
        let d = vec_norm(&(x.value(t) - x.value(s)));
        let gap = (t - s).abs();
        if gap > 0.0 {
            worst_ratio = worst_ratio.max(d / gap);
        }
        worst_excess = worst_excess.max(d - m0 * gap);
    }
    Ok(LipschitzReport { m0, samples, seed, window: (lo, hi), worst_ratio, worst_excess, passed: worst_excess <= 1e-9 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depca_engine::{solve_bounded_depca, DepcaSystem};
    use crate::matrix_core::{real_vector, Matrix};
    use crate::signals::cycles;
    use proptest::prelude::*;

    fn one(x: f64) -> CVector {
        real_vector(&[x])
    }

    fn sin(freq_cycles: f64) -> ForcingSignal {
        ForcingSignal::sine(one(1.0), cycles(freq_cycles))
    }

    fn solve(f: ForcingSignal, n0: i64, n1: i64) -> HybridTrajectory {
        let sys = DepcaSystem::new(Matrix::real_scalar(0.0), Matrix::real_scalar(-0.5), f).unwrap();
        solve_bounded_depca(&sys, n0, n1, 1e-10).unwrap()
    }

    #[test]
    fn periodicity_examples() {
        let c = ForcingSignal::constant(one(3.0));
        let rep = periodicity_check(&c, (7, 3), 1e-12, (-5.0, 5.0)).unwrap();
        assert!(rep.passed && rep.deviation == 0.0);

        let x = solve(ForcingSignal::cosine(one(1.0), cycles(1.0)), -3, 3);
        assert!(periodicity_check(&x, (1, 1), 1e-6, (-10.0, 10.0)).unwrap().passed);

        let x = solve(ForcingSignal::cosine(one(1.0), cycles(1.5)), -4, 4);
        let two = periodicity_check(&x, (2, 1), 1e-6, (-10.0, 10.0)).unwrap();
        assert!(two.passed, "{two:?}");
        // every h(n) = ∫ cos(3πs) over a unit cell vanishes, so x(t) = sin(3πt)/(3π)
        // keeps the short period of the forcing
        let short = periodicity_check(&x, (2, 3), 1e-6, (-10.0, 10.0)).unwrap();
        assert!(short.passed);
        assert!((x.evaluate(0.5).unwrap()[0].re - (1.5 * std::f64::consts::PI).sin() / (3.0 * std::f64::consts::PI)).abs() < 1e-9);
        // with a sine forcing h(n) = 2(−1)ⁿ/(3π), and only the period 2 survives
        let y = solve(ForcingSignal::sine(one(1.0), cycles(1.5)), -4, 4);
        assert!(periodicity_check(&y, (2, 1), 1e-6, (-10.0, 10.0)).unwrap().passed);
        assert!(!periodicity_check(&y, (2, 3), 1e-6, (-10.0, 10.0)).unwrap().passed);
        // the forcing itself does have the short period
        let f = ForcingSignal::cosine(one(1.0), cycles(1.5));
        assert!(periodicity_check(&f, (2, 3), 1e-9, (-3.0, 3.0)).unwrap().passed);

        assert!(matches!(
            periodicity_check(&x, (5, 1), 1e-6, (-10.0, 10.0)),
            Err(DiagnosticsError::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn almost_period_examples() {
        let rep = almost_period_scan(&sin(1.0), 1e-6, 10, true, 5.0, 0.01).unwrap();
        assert_eq!(rep.passing_shifts.len(), 20);

        let f = ForcingSignal::sum(vec![sin(1.0), sin(2f64.sqrt())]).unwrap();
        let rep = almost_period_scan(&f, 0.3, 100, true, 5.0, 0.01).unwrap();
        assert!(!rep.passing_shifts.is_empty() && rep.passing_shifts.len() < 200);
        // grid oracle: |2 sin(π√2 s)| bounds the deviation of the second term
        for s in &rep.passing_shifts {
            let bound = 2.0 * (PI_SQRT2 * s).sin().abs();
            assert!(bound < 0.3 + 1e-9 || bound.is_nan(), "{s}");
        }
        assert!(rep.passing_shifts.contains(&12.0) && rep.passing_shifts.contains(&-70.0));

        let alt = ForcingSignal::alternating();
        let rep = almost_period_scan(&alt, 1e-6, 10, true, 5.0, 0.01).unwrap();
        for (s, d) in rep.tested_shifts.iter().zip(&rep.deviations) {
            if (*s as i64) % 2 == 0 {
                assert_eq!(*d, 0.0);
            } else {
                assert!((d - 2.0).abs() < 1e-15);
            }
        }
        assert!(rep.passing_shifts.iter().all(|s| (*s as i64) % 2 == 0));
    }

    const PI_SQRT2: f64 = std::f64::consts::PI * std::f64::consts::SQRT_2;

    #[test]
    fn real_shift_scan_finds_fractional_periods() {
        let rep = almost_period_scan(&sin(2.0), 1e-6, 2, false, 3.0, 0.01).unwrap();
        assert!(rep.passing_shifts.iter().any(|s| (s - 0.5).abs() < 1e-12));
    }

    #[test]
    fn shift_limit_examples() {
        let probes = [0.0, 0.3, 1.7];
        let c = ForcingSignal::constant(one(1.0));
        let rep = shift_limit_probe(&c, &ShiftSequence::new(vec![1, 5, 9, 30]), &probes).unwrap();
        assert_eq!(rep.max_deviation(), 0.0);

        let rep = shift_limit_probe(&sin(1.0), &ShiftSequence::new(vec![3, -8, 40, 1000]), &probes).unwrap();
        assert!(rep.max_deviation() < 1e-9);

        // continued-fraction denominators of √2
        let pell = ShiftSequence::new(vec![1, 2, 5, 12, 29, 70, 169, 408, 985, 2378]);
        let rep = shift_limit_probe(&sin(2f64.sqrt()), &pell, &probes).unwrap();
        for p in &rep.profiles {
            let devs: Vec<f64> = p.tail_deviations.iter().map(|d| d.1).collect();
            assert!(devs.windows(2).all(|w| w[1] <= w[0]));
            assert!(devs[0] < 0.1, "{devs:?}");
        }
        assert!(shift_limit_probe(&c, &ShiftSequence::default(), &probes).is_err());
    }

    #[test]
    fn lipschitz_examples() {
        let zero = ForcingSignal::zero(1);
        assert!(lipschitz_probe(&zero, 0.0, 100, DEFAULT_SEED, (-5.0, 5.0)).unwrap().passed);

        let x = solve(ForcingSignal::cosine(one(1.0), cycles(1.0)), -3, 3);
        let sup = x.sup_norm();
        let rep = lipschitz_probe(&x, 0.5 * sup + 1.0, 1000, DEFAULT_SEED, (-3.0, 4.0)).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(!lipschitz_probe(&x, 0.0, 100, DEFAULT_SEED, (-3.0, 4.0)).unwrap().passed);
        assert!(lipschitz_probe(&x, 1.0, 10, DEFAULT_SEED, (-3.0, 4.0)).is_err());
    }

    #[test]
    fn rational_periodic_is_exact() {
        let f = ForcingSignal::rational_periodic(3, 2, vec![one(0.0), one(1.0), one(-2.0), one(0.5)]).unwrap();
        let rep = periodicity_check(&f, (3, 2), 1e-12, (-4.0, 4.0)).unwrap();
        assert!(rep.deviation < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn period_doubling_is_consistent(k in 1i64..4, phase in 0.0f64..1.0) {
            let f = ForcingSignal::sum(vec![
                ForcingSignal::cosine(one(1.0), cycles(1.0 / k as f64)),
                ForcingSignal::constant(one(phase)),
            ]).unwrap();
            let single = periodicity_check(&f, (k, 1), 1e-9, (-10.0, 10.0)).unwrap();
            let double = periodicity_check(&f, (2 * k, 1), 1e-9, (-10.0, 10.0)).unwrap();
            prop_assert!(!single.passed || double.passed);
        }

        #[test]
        fn passing_sets_grow_with_epsilon(e1 in 0.05f64..0.5, extra in 0.0f64..0.5) {
            let f = ForcingSignal::sum(vec![sin(1.0), sin(2f64.sqrt())]).unwrap();
            let small = almost_period_scan(&f, e1, 40, true, 3.0, 0.02).unwrap();
            let large = almost_period_scan(&f, e1 + extra, 40, true, 3.0, 0.02).unwrap();
            prop_assert!(small.passing_shifts.iter().all(|s| large.passing_shifts.contains(s)));
        }
    }
}
