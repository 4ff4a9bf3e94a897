//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the lines always reach the test log. The process
//! fails when a criterion fails, except for the entries in
//! [`KNOWN_UNATTAINABLE`], which are still printed as FAIL.

use std::f64::consts::{PI, SQRT_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use depca::depca_engine::{
    massera_solve, purely_imaginary_scalar, reduce_to_difference, solve_bounded_depca, verify_trajectory, DepcaError,
    DepcaSystem, HybridTrajectory,
};
use depca::diagnostics::{almost_period_scan, periodicity_check};
use depca::difference_engine::{
    bound_check, certify_constant, constant_forcing, oracle_forward_sum, solve_bounded, verify_certificate,
    DichotomyCertificate, DifferenceSystem, ForcingFn,
};
use depca::matrix_core::{check_eigen_condition, vec_norm, CVector, EigenCondition, Matrix};
use depca::reduction::solve_by_reduction;
use depca::signals::{cycles, Boundedness, ForcingSignal, Sequence};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria whose literal statement contradicts the exact solution; see the
/// detail printed for each.
const KNOWN_UNATTAINABLE: &[u32] = &[5];

const SEED: u64 = 0x0acc_e975;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn v(xs: &[f64]) -> CVector {
    CVector::from_iterator(xs.len(), xs.iter().map(|&x| c(x)))
}

fn s(x: f64) -> Matrix {
    Matrix::real_scalar(x)
}

fn diag(xs: &[f64]) -> Matrix {
    Matrix::from_diagonal(&xs.iter().map(|&x| c(x)).collect::<Vec<_>>())
}

/// `S·diag(eigs)·S⁻¹` with a seeded, well conditioned `S`.
fn with_spectrum(eigs: &[f64], rng: &mut ChaCha8Rng) -> Matrix {
    let p = eigs.len();
    let rows: Vec<Vec<f64>> =
        (0..p).map(|i| (0..p).map(|j| rng.gen_range(-0.5..0.5) + if i == j { 2.0 } else { 0.0 }).collect()).collect();
    let sm = Matrix::from_real_rows(&rows).unwrap();
    sm.solve_right(&(&sm * &diag(eigs))).unwrap()
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

/// Trajectories produced along the way, re-checked by criterion 4.
struct Collected {
    label: String,
    sys: DepcaSystem,
    traj: HybridTrajectory,
    tol: f64,
}

type Pool = Vec<Collected>;

fn keep(pool: &mut Pool, label: &str, sys: &DepcaSystem, traj: &HybridTrajectory, tol: f64) {
    pool.push(Collected { label: label.into(), sys: sys.clone(), traj: traj.clone(), tol });
}

// 1. Green series on constant coefficients
fn green_series() -> Outcome {
    let tol = 1e-10;
    let (n0, n1) = (-50, 50);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let cases: Vec<(&str, Matrix)> = vec![
        ("[0.5]", s(0.5)),
        ("[2]", s(2.0)),
        ("diag(0.5,3)", diag(&[0.5, 3.0])),
        ("random 3x3 {0.3,0.6}/{1.8}", with_spectrum(&[0.3, 0.6, 1.8], &mut rng)),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, cm) in cases {
        let p = cm.rows();
        let h: ForcingFn = Arc::new(move |n: i64| {
            let n = n as f64;
            let all = [c((0.7 * n).cos()), c((SQRT_2 * n).sin()), Complex64::new(1.0, 0.5 * n.cos())];
            CVector::from_iterator(p, all.into_iter().take(p))
        });
        let sys = DifferenceSystem::constant(cm.clone(), h.clone(), Some(1.2)).unwrap();
        let cert = certify_constant(&cm).unwrap();
        let x = solve_bounded(&sys, &cert, n0, n1, tol).unwrap();
        let rec = sys.recursion_residual(n0, &x.values).unwrap();
        let mut line = format!("{name}: recursion {rec:.1e}");
        ok &= rec <= 3.0 * tol;
        if let Ok(oracle) = oracle_forward_sum(&cm, &*h, n0, n1) {
            let dev = x.values.iter().zip(&oracle).map(|(a, b)| vec_norm(&(a - b))).fold(0.0, f64::max);
            line += &format!(", oracle {dev:.1e}");
            ok &= dev <= 5.0 * tol;
        }
        notes.push(line);
    }
    outcome(ok, notes.join("; "))
}

// 2. Explicit bound K(1+e^{-α})/(1-e^{-α})·sup|h|
fn explicit_bound() -> Outcome {
    let tol = 1e-10;
    let cm = s(0.5);
    let sys = DifferenceSystem::constant(cm.clone(), constant_forcing(v(&[1.0])), Some(1.0)).unwrap();
    let cert = certify_constant(&cm).unwrap();
    let x = solve_bounded(&sys, &cert, -30, 30, tol).unwrap();
    let base = bound_check(&x, &cert, 1.0, 0.0);
    let mut ok = (base.sup_solution - 2.0).abs() <= 5.0 * tol && base.bound >= 2.0;
    let mut detail = format!("C=[0.5], h=1: sup|x| = {:.12}, bound = {:.4}", base.sup_solution, base.bound);

    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 2);
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..20 {
        let p = rng.gen_range(1..=3);
        let eigs: Vec<f64> = (0..p)
            .map(|_| {
                let r = if rng.gen_bool(0.5) { rng.gen_range(0.2..0.8) } else { rng.gen_range(1.25..3.0) };
                if rng.gen_bool(0.5) {
                    r
                } else {
                    -r
                }
            })
            .collect();
        let cm = with_spectrum(&eigs, &mut rng);
        let amp: Vec<f64> = (0..p).map(|_| rng.gen_range(0.1..2.0)).collect();
        let (w1, w2) = (rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0));
        let a2 = amp.clone();
        let h: ForcingFn = Arc::new(move |n: i64| {
            let t = n as f64;
            CVector::from_iterator(a2.len(), a2.iter().enumerate().map(|(i, a)| c(a * (w1 * t + i as f64).cos() * (w2 * t).sin())))
        });
        let sup_h = (-400..=400).map(|n| vec_norm(&h(n))).fold(0.0, f64::max);
        let sys = DifferenceSystem::constant(cm.clone(), h, Some(sup_h)).unwrap();
        let cert = certify_constant(&cm).unwrap();
        let x = solve_bounded(&sys, &cert, -50, 50, tol).unwrap();
        let r = bound_check(&x, &cert, sup_h, 0.0);
        ok &= r.passed;
        worst_ratio = worst_ratio.max(r.sup_solution / r.bound);
    }
    detail += &format!("; 20 random instances, worst sup|x|/bound = {worst_ratio:.3}");
    outcome(ok, detail)
}

// 3. Eigen condition λ_B·u ≠ −1
fn eigen_condition() -> Outcome {
    let u = match check_eigen_condition(c(0.0), c(-1.0)) {
        EigenCondition::Fail { u } => u,
        EigenCondition::Pass => return outcome(false, "check_eigen_condition(0, -1) passed"),
    };
    let sys = DepcaSystem::new(s(0.0), s(-1.0), ForcingSignal::zero(1)).unwrap();
    let (raised, det) = match reduce_to_difference(&sys, 1e-10) {
        Err(DepcaError::SingularC { det }) => (true, det),
        _ => (false, f64::NAN),
    };
    outcome(
        (u - 1.0).abs() <= 1e-10 && raised && det <= 1e-12,
        format!("u* = {u:.12}, SingularC raised = {raised}, |det Z(1,0)| = {det:.1e}"),
    )
}

// 4. Continuity and ODE residual of every collected trajectory
fn solution_contract(pool: &Pool) -> Outcome {
    let mut ok = !pool.is_empty();
    let (mut worst_gap, mut worst_res_ratio): (f64, f64) = (0.0, 0.0);
    let mut failures = Vec::new();
    for item in pool {
        let r = verify_trajectory(&item.sys, &item.traj, item.tol, 0.0);
        let pass = r.continuity_gap <= 1e-8 && r.residual <= r.residual_limit;
        worst_gap = worst_gap.max(r.continuity_gap);
        worst_res_ratio = worst_res_ratio.max(r.residual / r.residual_limit);
        if !pass {
            failures.push(item.label.clone());
        }
        ok &= pass;
    }
    outcome(
        ok,
        format!(
            "{} trajectories, max continuity gap {worst_gap:.1e}, max residual/limit {worst_res_ratio:.1e}{}",
            pool.len(),
            if failures.is_empty() { String::new() } else { format!(", failing: {}", failures.join(", ")) }
        ),
    )
}

// 5. Periodicity of the bounded solution
fn periodicity(pool: &mut Pool) -> Outcome {
    let tol = 1e-10;
    let solve = |f: ForcingSignal| {
        let sys = DepcaSystem::new(s(0.0), s(-0.5), f).unwrap();
        let traj = solve_bounded_depca(&sys, -8, 8, tol).unwrap();
        (sys, traj)
    };
    let (sys1, x1) = solve(ForcingSignal::cosine(v(&[1.0]), cycles(1.0)));
    keep(pool, "cos 2πt", &sys1, &x1, tol);
    let p1 = periodicity_check(&x1, (1, 1), 1e-6, x1.domain()).unwrap();

    let (sys2, x2) = solve(ForcingSignal::cosine(v(&[1.0]), cycles(1.5)));
    keep(pool, "cos 3πt", &sys2, &x2, tol);
    let p2 = periodicity_check(&x2, (2, 1), 1e-6, x2.domain()).unwrap();
    let p23 = periodicity_check(&x2, (2, 3), 1e-6, x2.domain()).unwrap();
    // every h(n) = ∫ₙⁿ⁺¹ cos 3πs ds vanishes, so x = sin(3πt)/(3π)
    let closed = (0..=1600)
        .map(|k| -8.0 + k as f64 * 0.01)
        .map(|t| (x2.evaluate(t).unwrap()[0] - c((3.0 * PI * t).sin() / (3.0 * PI))).norm())
        .fold(0.0, f64::max);

    // the sine forcing gives h(n) ≠ 0 and a solution whose least period is 2
    let (sys3, x3) = solve(ForcingSignal::sine(v(&[1.0]), cycles(1.5)));
    keep(pool, "sin 3πt", &sys3, &x3, tol);
    let s2 = periodicity_check(&x3, (2, 1), 1e-6, x3.domain()).unwrap();
    let s23 = periodicity_check(&x3, (2, 3), 1e-6, x3.domain()).unwrap();

    let pass = p1.passed && p2.passed && !p23.passed;
    outcome(
        pass,
        format!(
            "cos 2πt period 1: dev {:.1e} ({}); cos 3πt period 2: dev {:.1e} ({}); cos 3πt period 2/3: dev {:.1e} ({}, expected fail; \
             the exact solution sin(3πt)/(3π), matched to {closed:.1e}, has period 2/3); \
             sin 3πt for contrast: period 2 {}, period 2/3 {}",
            p1.deviation,
            verdict(p1.passed),
            p2.deviation,
            verdict(p2.passed),
            p23.deviation,
            verdict(p23.passed),
            verdict(s2.passed),
            verdict(s23.passed),
        ),
    )
}

fn verdict(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}

// 6. Continuous-time bounded solutions for hyperbolic A
fn massera() -> Outcome {
    let tol = 1e-9;
    let cos = ForcingSignal::cosine(v(&[1.0]), 1.0);
    let m1 = massera_solve(&s(-1.0), &cos, tol).unwrap();
    let dev1 = (0..=4000)
        .map(|k| -20.0 + k as f64 * 0.01)
        .map(|t| (m1.evaluate(t).unwrap()[0] - c((t.cos() + t.sin()) / 2.0)).norm())
        .fold(0.0, f64::max);
    let one = ForcingSignal::constant(v(&[1.0]));
    let m2 = massera_solve(&s(1.0), &one, tol).unwrap();
    let dev2 = (0..=400)
        .map(|k| -20.0 + k as f64 * 0.1)
        .map(|t| (m2.evaluate(t).unwrap()[0] - c(-1.0)).norm())
        .fold(0.0, f64::max);
    outcome(
        dev1 <= 1e-6 && dev2 <= 1e-8,
        format!("A=-1, f=cos: dev {dev1:.1e}; A=1, f=1: dev from -1 {dev2:.1e}"),
    )
}

// 7. Purely imaginary scalar x' = iθx + f
fn purely_imaginary() -> Outcome {
    let window = 40.0;
    let f = ForcingSignal::exponential(v(&[1.0]), 2.0);
    let (sol, _) = purely_imaginary_scalar(1.0, &f, Complex64::new(0.0, -1.0), window).unwrap();
    let dev = (0..=8000)
        .map(|k| -window + k as f64 * 0.01)
        .map(|t| (sol.evaluate(t).unwrap().norm() - 1.0).abs())
        .fold(0.0, f64::max);
    let resonant = ForcingSignal::exponential(v(&[1.0]), 1.0);
    let (_, report) = purely_imaginary_scalar(1.0, &resonant, c(0.0), window).unwrap();
    let flagged = report.verdict == Boundedness::UnboundedSuspected;
    outcome(dev <= 1e-6 && flagged, format!("f=e^(2it): sup ||x|-1| = {dev:.1e}; f=e^(it) flagged unbounded: {flagged}"))
}

// 8. Triangular cascade against the direct solver
fn reduction(pool: &mut Pool) -> Outcome {
    let tol = 1e-10;
    let a = Matrix::from_real_rows(&[vec![-1.0, 1.0], vec![0.0, -2.0]]).unwrap();
    let b = Matrix::from_real_rows(&[vec![-0.5, 0.0], vec![0.0, -0.25]]).unwrap();
    let f = ForcingSignal::sum(vec![
        ForcingSignal::cosine(v(&[1.0, 0.0]), cycles(1.0)),
        ForcingSignal::constant(v(&[0.0, 1.0])),
    ])
    .unwrap();
    let sys = DepcaSystem::new(a, b, f).unwrap();
    let (n0, n1) = (-10, 10);
    let direct = solve_bounded_depca(&sys, n0, n1, tol).unwrap();
    let reduced = solve_by_reduction(&sys, None, n0, n1, tol).unwrap();
    let rescaled = solve_by_reduction(&sys, Some(&diag(&[3.0, -0.25])), n0, n1, tol).unwrap();
    keep(pool, "triangular direct", &sys, &direct, tol);
    keep(pool, "triangular reduced", &sys, &reduced.trajectory, tol);
    keep(pool, "triangular rescaled", &sys, &rescaled.trajectory, tol);
    let max_dev = |x: &HybridTrajectory, y: &HybridTrajectory| {
        x.samples().iter().zip(y.samples()).map(|(p, q)| vec_norm(&(p - q))).fold(0.0, f64::max)
    };
    let d_direct = max_dev(&reduced.trajectory, &direct);
    let d_scale = max_dev(&reduced.trajectory, &rescaled.trajectory);
    outcome(
        d_direct <= 1e-8 && d_scale <= 5e-9,
        format!("reduction vs direct {d_direct:.1e}; rescaled basis diag(3,-0.25) vs computed {d_scale:.1e}"),
    )
}

// 9. Certificates from certify_constant hold, inflated ones do not
fn certificates() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 9);
    let mut cases = vec![s(0.5), s(2.0), s(-0.9), diag(&[0.5, 3.0]), with_spectrum(&[0.3, 0.6, 1.8], &mut rng)];
    cases.push(Matrix::from_complex_rows(&[vec![Complex64::new(0.3, 0.4), c(1.0)], vec![c(0.0), Complex64::new(-1.1, 0.9)]]).unwrap());
    for _ in 0..4 {
        let eigs = [rng.gen_range(0.1..0.85), rng.gen_range(1.2..2.5), -rng.gen_range(0.1..0.85)];
        cases.push(with_spectrum(&eigs, &mut rng));
    }
    let mut ok = true;
    let mut worst_margin = f64::INFINITY;
    let mut inflated_rejected = 0;
    for cm in &cases {
        let sys = DifferenceSystem::constant(cm.clone(), constant_forcing(CVector::zeros(cm.rows())), Some(0.0)).unwrap();
        let cert = certify_constant(cm).unwrap();
        let r = verify_certificate(&sys, &cert, 60).unwrap();
        ok &= r.passed();
        worst_margin = worst_margin.min(r.worst_decay_margin);
        let inflated = DichotomyCertificate { alpha: cert.alpha + 1.0, ..cert.clone() };
        let ri = verify_certificate(&sys, &inflated, 60).unwrap();
        if !ri.passed() {
            inflated_rejected += 1;
        }
    }
    ok &= inflated_rejected == cases.len();
    outcome(
        ok,
        format!(
            "{} certificates verified on window 60 (worst decay margin {worst_margin:.3}); α+1 rejected {inflated_rejected}/{}",
            cases.len(),
            cases.len()
        ),
    )
}

// 10. ε-almost periods
fn diagnostics() -> Outcome {
    let f = ForcingSignal::sum(vec![
        ForcingSignal::sine(v(&[1.0]), cycles(1.0)),
        ForcingSignal::sine(v(&[1.0]), cycles(SQRT_2)),
    ])
    .unwrap();
    let r = almost_period_scan(&f, 0.3, 100, true, 20.0, 0.01).unwrap();
    let g = ForcingSignal::step(Sequence::Periodic(vec![v(&[1.0]), v(&[-1.0])])).unwrap();
    let rg = almost_period_scan(&g, 1e-6, 20, true, 10.0, 0.01).unwrap();
    let even: Vec<f64> = (-20..=20).filter(|k| k % 2 == 0 && *k != 0).map(|k| k as f64).collect();
    let exact_even = rg.passing_shifts == even;
    outcome(
        !r.passing_shifts.is_empty() && exact_even,
        format!(
            "quasi-periodic sum: {} of {} shifts pass at ε=0.3 (first {:?}); (-1)^[t]: passing shifts are exactly the even ones: {exact_even}",
            r.passing_shifts.len(),
            r.tested_shifts.len(),
            r.passing_shifts.iter().find(|s| **s > 0.0)
        ),
    )
}

/// Extra trajectories so criterion 4 covers several forcing kinds.
fn regression_pool(pool: &mut Pool) {
    let tol = 1e-9;
    let systems: Vec<(&str, Matrix, Matrix, ForcingSignal)> = vec![
        ("alternating step", s(-1.0), s(0.3), ForcingSignal::alternating()),
        ("unstable A", s(0.5), s(-1.2), ForcingSignal::cosine(v(&[1.0]), 1.0)),
        ("aa test", s(-0.4), s(0.1), ForcingSignal::aa_test(v(&[1.0]))),
        (
            "rotation 2x2",
            Matrix::from_real_rows(&[vec![-0.2, 0.5], vec![-0.5, -0.2]]).unwrap(),
            diag(&[-0.3, -0.3]),
            ForcingSignal::sine(v(&[1.0, -0.5]), 0.7),
        ),
        (
            "rational periodic",
            s(-2.0),
            s(0.5),
            ForcingSignal::rational_periodic(3, 2, vec![v(&[0.0]), v(&[1.0]), v(&[0.5])]).unwrap(),
        ),
    ];
    for (label, a, b, f) in systems {
        let sys = DepcaSystem::new(a, b, f).unwrap();
        let traj = solve_bounded_depca(&sys, -6, 6, tol).unwrap();
        keep(pool, label, &sys, &traj, tol);
    }
}

fn main() {
    let mut pool: Pool = Vec::new();
    let mut results: Vec<(u32, &str, Result<Outcome, String>, f64)> = Vec::new();
    let mut timed = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).map_err(|e| {
            e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
        });
        results.push((id, name, r, start.elapsed().as_secs_f64()));
    };
    timed(1, "Green-series correctness", &mut green_series);
    timed(2, "explicit solution bound", &mut explicit_bound);
    timed(3, "eigen condition", &mut eigen_condition);
    timed(5, "periodicity", &mut || periodicity(&mut pool));
    timed(6, "continuous-time bounded solution", &mut massera);
    timed(7, "purely imaginary case", &mut purely_imaginary);
    timed(8, "reduction method", &mut || reduction(&mut pool));
    timed(9, "dichotomy certificates", &mut certificates);
    timed(10, "diagnostics", &mut diagnostics);
    let start = Instant::now();
    regression_pool(&mut pool);
    let pool_time = start.elapsed().as_secs_f64();
    timed(4, "solution contract", &mut || solution_contract(&pool));
    if let Some(last) = results.last_mut() {
        last.3 += pool_time;
    }
    results.sort_by_key(|r| r.0);

    let mut unexpected = 0;
    println!("acceptance criteria");
    for (id, name, r, secs) in &results {
        let (passed, detail) = match r {
            Ok(o) => (o.passed, o.detail.clone()),
            Err(msg) => (false, format!("panicked: {msg}")),
        };
        let known = KNOWN_UNATTAINABLE.contains(id);
        let tag = if passed { "PASS" } else { "FAIL" };
        let note = if !passed && known { " [documented as unattainable]" } else { "" };
        println!("{tag} {id:>2} {name} ({secs:.2}s): {detail}{note}");
        if !passed && !known {
            unexpected += 1;
        }
    }
    let passed = results.iter().filter(|r| matches!(&r.2, Ok(o) if o.passed)).count();
    println!("{passed}/{} criteria pass; {unexpected} unexpected failure(s)", results.len());
    if unexpected > 0 {
        std::process::exit(1);
    }
}
