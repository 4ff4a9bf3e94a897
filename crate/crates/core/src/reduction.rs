//! Triangular cascade: with `T⁻¹AT = Ā` and `T⁻¹BT = B̄` upper triangular,
//! `y = T⁻¹x` solves `y′ = Āy + B̄y([t]) + T⁻¹f`, whose rows are scalar
//! equations solved from the last row upward.

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::depca_engine::{
    plan, solve_with_plan, verify_trajectory, DepcaError, DepcaSystem, HybridTrajectory, SegmentFn, SolvePlan,
};
use crate::matrix_core::{
    check_eigen_condition, simultaneous_triangularize, CVector, EigenCondition, Matrix, MatrixError,
    TriangularizeError,
};
use crate::signals::ForcingSignal;
use crate::tolerances::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error(transparent)]
    Triangularize(#[from] TriangularizeError),
    #[error("eigen condition (λ_B·u = −1 form) fails on level {level} at u = {u:.12}")]
    EigenConditionFail { level: usize, u: f64 },
    #[error("level {level} has companion |c| = {modulus} on the unit circle; no dichotomy")]
    NoDichotomy { level: usize, modulus: f64 },
    #[error("level {level}: {source}")]
    Level { level: usize, source: DepcaError },
    #[error(transparent)]
    Depca(#[from] DepcaError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// One scalar row `y_i′ = α_i y_i + β_i y_i([t]) + z_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeLevel {
    /// 1-based row index.
    pub index: usize,
    pub alpha: Complex64,
    pub beta: Complex64,
    /// `e^α + β(e^α − 1)/α`.
    pub companion: Complex64,
}

#[derive(Debug, Clone)]
pub struct TriangularCascade {
    pub t: Matrix,
    pub t_inverse: Matrix,
    pub a_bar: Matrix,
    pub b_bar: Matrix,
    /// `T⁻¹f`.
    pub transformed_forcing: ForcingSignal,
    /// Ordered `p, p−1, …, 1`.
    pub levels: Vec<CascadeLevel>,
}

/// `e^α + β(e^α − 1)/α`, with the `α → 0` limit `1 + β`.
pub fn scalar_companion(alpha: Complex64, beta: Complex64) -> Complex64 {
    let ratio = if alpha.norm() < 1e-8 {
        Complex64::new(1.0, 0.0) + alpha * 0.5 + alpha * alpha / 6.0
    } else {
        (alpha.exp() - 1.0) / alpha
    };
    alpha.exp() + beta * ratio
}

pub fn build_cascade(sys: &DepcaSystem, user_t: Option<&Matrix>) -> Result<TriangularCascade, ReductionError> {
    let tri = simultaneous_triangularize(&sys.a, &sys.b, user_t)?;
    let t_inverse = tri.t.inverse()?;
    let p = sys.dim();
    let mut levels = Vec::with_capacity(p);
    for i in (0..p).rev() {
        let (alpha, beta) = (tri.a_bar[(i, i)], tri.b_bar[(i, i)]);
        if let EigenCondition::Fail { u } = check_eigen_condition(alpha, beta) {
            return Err(ReductionError::EigenConditionFail { level: i + 1, u });
        }
        levels.push(CascadeLevel { index: i + 1, alpha, beta, companion: scalar_companion(alpha, beta) });
    }
    let transformed_forcing =
        ForcingSignal::linear(t_inverse.clone(), sys.f.clone()).map_err(|e| MatrixError::DimensionMismatch(e.to_string()))?;
    Ok(TriangularCascade { t: tri.t, t_inverse, a_bar: tri.a_bar, b_bar: tri.b_bar, transformed_forcing, levels })
}

fn scalar_system(alpha: Complex64, beta: Complex64, z: ForcingSignal) -> Result<DepcaSystem, DepcaError> {
    DepcaSystem::new(Matrix::scalar(alpha), Matrix::scalar(beta), z)
}

fn require_hyperbolic(level: usize, c: Complex64) -> Result<(), ReductionError> {
    if (c.norm() - 1.0).abs() < Tolerances::DEFAULT.boundary_margin {
        return Err(ReductionError::NoDichotomy { level, modulus: c.norm() });
    }
    Ok(())
}

/// Bounded solution of one scalar row on `[n0, n1 + 1]`.
pub fn solve_scalar_depca(
    alpha: Complex64,
    beta: Complex64,
    z: ForcingSignal,
    n0: i64,
    n1: i64,
    tol: f64,
) -> Result<HybridTrajectory, ReductionError> {
    require_hyperbolic(1, scalar_companion(alpha, beta))?;
    let sup = z.sup_bound();
    let sys = scalar_system(alpha, beta, z)?;
    let plan = plan(&sys, sup, tol)?;
    Ok(solve_with_plan(&sys, &plan, n0, n1, tol)?)
}

/// Per-level record of a cascade solve.
#[derive(Debug, Clone)]
pub struct LevelTrace {
    pub level: CascadeLevel,
    /// Integer window `[n0, n1]` the level was solved on.
    pub window: (i64, i64),
    pub radius: usize,
    /// A-priori bound on `sup|z_i|`.
    pub forcing_bound: f64,
    pub sup_norm: f64,
    pub trajectory: HybridTrajectory,
}

#[derive(Debug, Clone)]
pub struct ReductionSolution {
    pub cascade: TriangularCascade,
    /// Ordered `p, p−1, …, 1`.
    pub levels: Vec<LevelTrace>,
    /// `x = T·y` on the requested window, with its own verification report.
    pub trajectory: HybridTrajectory,
}

impl ReductionSolution {
    /// `y_i` as a trajectory (1-based row index).
    pub fn component(&self, index: usize) -> Option<&HybridTrajectory> {
        self.levels.iter().find(|l| l.level.index == index).map(|l| &l.trajectory)
    }
}

/// `z_i(t) = Σ_{j>i} (ā_ij y_j(t) + b̄_ij y_j([t])) + (T⁻¹f)_i(t)`.
fn aggregated_forcing(
    i: usize,
    cascade: &TriangularCascade,
    solved: &[Option<HybridTrajectory>],
    bound: f64,
) -> ForcingSignal {
    let p = cascade.a_bar.rows();
    let mut couplings = Vec::new();
    for j in (i + 1)..p {
        let (a, b) = (cascade.a_bar[(i, j)], cascade.b_bar[(i, j)]);
        if a != Complex64::new(0.0, 0.0) || b != Complex64::new(0.0, 0.0) {
            couplings.push((a, b, solved[j].clone().expect("lower rows are solved first")));
        }
    }
    let h = cascade.transformed_forcing.clone();
    ForcingSignal::evaluator(
        1,
        bound,
        format!("z_{}", i + 1),
        Arc::new(move |t: f64| {
            let mut acc = h.evaluate(t)[i];
            let floor = t.floor();
            for (a, b, y) in &couplings {
                let nan = || CVector::from_element(1, Complex64::new(f64::NAN, f64::NAN));
                let yt = y.evaluate(t).unwrap_or_else(nan)[0];
                let yn = y.evaluate(floor).unwrap_or_else(nan)[0];
                acc += a * yt + b * yn;
            }
            CVector::from_element(1, acc)
        }),
    )
}

/// Solves the cascade bottom-up on windows wide enough for every level
/// above, then maps back with `x = T·y`.
pub fn solve_by_reduction(
    sys: &DepcaSystem,
    user_t: Option<&Matrix>,
    n0: i64,
    n1: i64,
    tol: f64,
) -> Result<ReductionSolution, ReductionError> {
    if n1 < n0 {
        return Err(DepcaError::InvalidArgument(format!("empty window [{n0}, {n1}]")).into());
    }
    let cascade = build_cascade(sys, user_t)?;
    let p = sys.dim();
    for level in &cascade.levels {
        require_hyperbolic(level.index, level.companion)?;
    }

    // a-priori bounds, last row first: sup|z_i| needs sup|y_j| for j > i
    let f_sup = sys.f.sup_bound();
    let mut plans: Vec<Option<SolvePlan>> = vec![None; p];
    let mut forcing_bounds = vec![0.0; p];
    for i in (0..p).rev() {
        let row_norm: f64 = (0..p).map(|k| cascade.t_inverse[(i, k)].norm()).sum();
        let mut bound = row_norm * f_sup;
        for j in (i + 1)..p {
            let coupling = cascade.a_bar[(i, j)].norm() + cascade.b_bar[(i, j)].norm();
            bound += coupling * plans[j].as_ref().expect("planned").solution_bound;
        }
        let probe = scalar_system(cascade.a_bar[(i, i)], cascade.b_bar[(i, i)], ForcingSignal::zero(1))?;
        plans[i] = Some(plan(&probe, bound, tol).map_err(|e| ReductionError::Level { level: i + 1, source: e })?);
        forcing_bounds[i] = bound;
    }

    // windows, first row first: row j must cover the forcing window of every row i < j
    let mut windows = vec![(n0, n1); p];
    for j in 1..p {
        let (mut lo, mut hi) = windows[j - 1];
        for i in 0..j {
            let (flo, fhi) = plans[i].as_ref().expect("planned").forcing_window(windows[i].0, windows[i].1 + 1);
            // z_i is evaluated on [flo, fhi + 1]; trajectory j covers [lo, hi + 1]
            lo = lo.min(flo);
            hi = hi.max(fhi);
        }
        windows[j] = (lo, hi);
    }

    let mut solved: Vec<Option<HybridTrajectory>> = vec![None; p];
    let mut traces = Vec::with_capacity(p);
    for (pos, level) in cascade.levels.iter().enumerate() {
        let i = level.index - 1;
        debug_assert_eq!(i, p - 1 - pos);
        let z = aggregated_forcing(i, &cascade, &solved, forcing_bounds[i]);
        let row = scalar_system(level.alpha, level.beta, z)?;
        let plan = plans[i].as_ref().expect("planned");
        let (lo, hi) = windows[i];
        let y = solve_with_plan(&row, plan, lo, hi, tol).map_err(|e| ReductionError::Level { level: level.index, source: e })?;
        traces.push(LevelTrace {
            level: *level,
            window: (lo, hi),
            radius: plan.radius,
            forcing_bound: forcing_bounds[i],
            sup_norm: y.report.as_ref().map(|r| r.sup_norm).unwrap_or_else(|| y.sup_norm()),
            trajectory: y.clone(),
        });
        solved[i] = Some(y);
    }

    // assemble y on [n0, n1 + 1] and map back
    let rows: Vec<HybridTrajectory> = solved.into_iter().map(|y| y.expect("all rows solved")).collect();
    let samples: Vec<CVector> = (n0..=n1 + 1)
        .map(|n| CVector::from_iterator(p, rows.iter().map(|y| y.sample(n).expect("window covers request")[0])))
        .collect();
    let rows = Arc::new(rows);
    let segment: SegmentFn = {
        let rows = rows.clone();
        Arc::new(move |n: i64, u: f64| {
            let t = n as f64 + u;
            CVector::from_iterator(
                p,
                rows.iter().map(|y| {
                    // u = 1 must return the left limit, not the next sample
                    if u >= 1.0 {
                        y.left_limit(n + 1).expect("window covers request")[0]
                    } else {
                        y.evaluate(t).expect("window covers request")[0]
                    }
                }),
            )
        })
    };
    let y = HybridTrajectory::from_parts(n0, n1, p, samples, segment);
    let mut x = y.map(&cascade.t);
    let report = verify_trajectory(sys, &x, tol, f64::NAN);
    if report.continuity_gap > report.continuity_limit {
        return Err(DepcaError::ContinuityBreach { n: n0, gap: report.continuity_gap, limit: report.continuity_limit }.into());
    }
    x.report = Some(report);
    Ok(ReductionSolution { cascade, levels: traces, trajectory: x })
}
