//! Solver for `x′(t) = Ax(t) + Bx([t]) + f(t)`.
//!
//! On each `[n, n+1)` the solution is `x(t) = Z(t, n)x(n) + H(t)` with
//! `Z(t, τ) = e^{A(t−τ)} + ∫_τ^t e^{A(t−s)} ds·B` and
//! `H(t) = ∫_n^t e^{A(t−s)} f(s) ds`. Evaluating at `t = n+1` gives the
//! companion recursion `x(n+1) = C x(n) + h(n)`, whose bounded solution is
//! taken from [`crate::difference_engine`].

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::difference_engine::{
    certify_constant, solve_bounded, truncation_radius, DichotomyCertificate, DifferenceError, DifferenceSystem,
    DiscreteSolution,
};
use crate::matrix_core::{
    check_eigen_condition, eigenvalues, expm, expm_integral, simultaneous_triangularize, spectral_split, vec_norm,
    CVector, EigenCondition, Matrix, MatrixError, SplitMode,
};
use crate::quadrature::{integrate_split_at_integers, QuadratureError};
use crate::signals::{integral_primitive_bounded, ForcingSignal, PrimitiveReport};
use crate::tolerances::Tolerances;

pub type SegmentFn = Arc<dyn Fn(i64, f64) -> CVector + Send + Sync>;
pub type EvalFn = Arc<dyn Fn(f64) -> CVector + Send + Sync>;

/// Grid used by [`solve_bounded_depca`] for the determinant screen.
pub const Z_GRID_POINTS: usize = 101;
/// Interior points per unit interval at which the ODE residual is sampled.
pub const RESIDUAL_POINTS: usize = 7;
/// Absolute floor added to the residual threshold, for trajectories near zero.
pub const RESIDUAL_FLOOR: f64 = 1e-9;
/// Samples of `s ∈ [0, 1]` used to bound `‖e^{As}‖` and `‖Z(s)‖`.
const NORM_SAMPLES: usize = 33;
/// Inflation applied to sampled norm maxima.
const NORM_MARGIN: f64 = 1.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DepcaError {
    #[error("Z(n+1, n) is singular: |det| = {det:e}")]
    SingularC { det: f64 },
    #[error("Z(t, τ) is not invertible on the unit interval: {0}")]
    ZNotInvertible(String),
    #[error("no exponential dichotomy: {0}")]
    NoDichotomy(String),
    #[error("continuity breach at n = {n}: |x(n⁻) − x(n)| = {gap:e} exceeds {limit:e}")]
    ContinuityBreach { n: i64, gap: f64, limit: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Difference(#[from] DifferenceError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// `x′ = Ax + Bx([t]) + f`.
#[derive(Debug, Clone)]
pub struct DepcaSystem {
    pub a: Matrix,
    pub b: Matrix,
    pub f: ForcingSignal,
}

fn cplx(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl DepcaSystem {
    pub fn new(a: Matrix, b: Matrix, f: ForcingSignal) -> Result<Self, DepcaError> {
        let p = a.require_square()?;
        if b.rows() != p || b.cols() != p {
            return Err(DepcaError::DimensionMismatch(format!("A is {p}x{p}, B is {}x{}", b.rows(), b.cols())));
        }
        if f.dim() != p {
            return Err(DepcaError::DimensionMismatch(format!("A is {p}x{p}, f has {} components", f.dim())));
        }
        Ok(Self { a, b, f })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn with_forcing(&self, f: ForcingSignal) -> Result<Self, DepcaError> {
        Self::new(self.a.clone(), self.b.clone(), f)
    }

    /// `Z(t, τ)` for `t ≥ τ`.
    pub fn z(&self, t: f64, tau: f64) -> Result<Matrix, DepcaError> {
        if t < tau {
            return Err(DepcaError::InvalidArgument(format!("Z(t, τ) needs t ≥ τ, got t = {t}, τ = {tau}")));
        }
        let (e, integral) = expm_integral(&self.a, &self.b, t - tau)?;
        Ok(&e + &integral)
    }

    /// `H(t) = ∫_{[t]}^t e^{A(t−s)} f(s) ds`.
    pub fn propagated_forcing(&self, t: f64, tol: f64) -> Result<CVector, DepcaError> {
        propagate_forcing(&self.a, &self.f, t.floor(), t, tol)
    }

    /// `C = Z(n+1, n)`, the same for every `n`.
    pub fn companion_matrix(&self) -> Result<Matrix, DepcaError> {
        self.z(1.0, 0.0)
    }

    /// `h(n) = ∫_n^{n+1} e^{A(n+1−s)} f(s) ds`.
    pub fn companion_forcing(&self, n: i64, tol: f64) -> Result<CVector, DepcaError> {
        propagate_forcing(&self.a, &self.f, n as f64, (n + 1) as f64, tol)
    }

    /// `max_{s∈[0,1]} ‖e^{As}‖`, sampled and inflated.
    pub fn exp_norm_bound(&self) -> Result<f64, DepcaError> {
        let mut worst: f64 = 1.0;
        for k in 1..NORM_SAMPLES {
            worst = worst.max(expm(&self.a, k as f64 / (NORM_SAMPLES - 1) as f64)?.norm_inf());
        }
        Ok(NORM_MARGIN * worst)
    }

    /// `max_{u∈[0,1]} ‖Z(u)‖`, sampled and inflated.
    pub fn z_norm_bound(&self) -> Result<f64, DepcaError> {
        let mut worst: f64 = 1.0;
        for k in 1..NORM_SAMPLES {
            worst = worst.max(self.z(k as f64 / (NORM_SAMPLES - 1) as f64, 0.0)?.norm_inf());
        }
        Ok(NORM_MARGIN * worst)
    }
}

/// `∫_{t0}^{t1} e^{A(t1−s)} f(s) ds` for `t0 ≤ t1`.
///
/// Exponential terms use `e^{iωt0}(iωI − A)⁻¹(e^{iωu}I − e^{Au})c` away from
/// resonance, step signals confined to one unit cell use `(∫₀ᵘ e^{As} ds)·g`,
/// everything else goes through adaptive quadrature split at integers.
pub fn propagate_forcing(a: &Matrix, f: &ForcingSignal, t0: f64, t1: f64, tol: f64) -> Result<CVector, DepcaError> {
    let p = a.require_square()?;
    if f.dim() != p {
        return Err(DepcaError::DimensionMismatch(format!("A is {p}x{p}, f has {} components", f.dim())));
    }
    let u = t1 - t0;
    if u < 0.0 {
        return Err(DepcaError::InvalidArgument(format!("propagation interval [{t0}, {t1}] is reversed")));
    }
    let mut acc = CVector::zeros(p);
    if u == 0.0 {
        return Ok(acc);
    }
    let (terms, rest) = f.split_trig();
    let margin = Tolerances::DEFAULT.resonance_margin;
    let mut exp_au: Option<Matrix> = None;
    let mut spectrum: Option<Vec<Complex64>> = None;
    let kernel = |s: f64| expm(a, t1 - s).expect("bounded argument");
    let pieces = (terms.len() + rest.len()).max(1) as f64;
    for term in &terms {
        if term.coefficient.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let iw = Complex64::new(0.0, term.frequency);
        let spec = match &spectrum {
            Some(s) => s,
            None => spectrum.insert(eigenvalues(a)?),
        };
        let gap = spec.iter().map(|l| (iw - l).norm()).fold(f64::INFINITY, f64::min);
        if gap > margin {
            let e = match &exp_au {
                Some(e) => e,
                None => exp_au.insert(expm(a, u)?),
            };
            let rhs = &term.coefficient * Complex64::new(0.0, term.frequency * u).exp() - e.mul_vec(&term.coefficient);
            let shifted = &Matrix::identity(p).scale(iw) - a;
            acc += shifted.solve_vec(&rhs)? * Complex64::new(0.0, term.frequency * t0).exp();
        } else {
            let c = term.coefficient.clone();
            let w = term.frequency;
            let g = |s: f64| kernel(s).mul_vec(&c) * Complex64::new(0.0, w * s).exp();
            acc += integrate_split_at_integers(&g, t0, t1, p, tol / pieces)?;
        }
    }
    for signal in &rest {
        let cell = t0.floor();
        if signal.is_step() && t1 <= cell + 1.0 {
            let (_, integral) = expm_integral(a, &Matrix::identity(p), u)?;
            acc += integral.mul_vec(&signal.evaluate(t0));
        } else {
            let g = |s: f64| kernel(s).mul_vec(&signal.evaluate(s));
            acc += integrate_split_at_integers(&g, t0, t1, p, tol / pieces)?;
        }
    }
    Ok(acc)
}

/// Companion system `x(n+1) = C x(n) + h(n)` with `h(n)` computed on demand.
///
/// Entries of `h(n)` are NaN where the quadrature failed; the difference
/// solver rejects non-finite forcing.
pub fn reduce_to_difference(sys: &DepcaSystem, quad_tol: f64) -> Result<DifferenceSystem, DepcaError> {
    let c = sys.companion_matrix()?;
    let det = c.determinant()?.norm();
    if det < Tolerances::DEFAULT.z_det {
        return Err(DepcaError::SingularC { det });
    }
    let bound = sys.exp_norm_bound()? * sys.f.sup_bound();
    let owned = sys.clone();
    let forcing = Arc::new(move |n: i64| {
        owned
            .companion_forcing(n, quad_tol)
            .unwrap_or_else(|_| CVector::from_element(owned.dim(), Complex64::new(f64::NAN, f64::NAN)))
    });
    Ok(DifferenceSystem::constant(c, forcing, Some(bound))?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZInvertibilityReport {
    /// Per-diagonal-pair verdicts when a simultaneous triangularization exists.
    pub analytic: Option<Vec<(Complex64, Complex64, EigenCondition)>>,
    pub min_det: f64,
    pub min_det_at: f64,
    pub grid_points: usize,
}

impl ZInvertibilityReport {
    pub fn analytic_failure(&self) -> Option<(usize, f64)> {
        self.analytic.as_ref().and_then(|pairs| {
            pairs.iter().enumerate().find_map(|(i, (_, _, v))| match v {
                EigenCondition::Fail { u } => Some((i, *u)),
                EigenCondition::Pass => None,
            })
        })
    }

    pub fn passed(&self) -> bool {
        self.analytic_failure().is_none() && self.min_det >= Tolerances::DEFAULT.z_det
    }
}

/// Eigenvalue screen on a simultaneous triangular form (when one is found)
/// plus a grid check of `|det Z(u)|` on `u ∈ [0, 1]`.
pub fn check_z_invertibility(sys: &DepcaSystem, grid_points: usize) -> Result<ZInvertibilityReport, DepcaError> {
    if grid_points < 2 {
        return Err(DepcaError::InvalidArgument("grid needs at least 2 points".into()));
    }
    let analytic = simultaneous_triangularize(&sys.a, &sys.b, None).ok().map(|tri| {
        tri.a_bar
            .diagonal()
            .into_iter()
            .zip(tri.b_bar.diagonal())
            .map(|(la, lb)| (la, lb, check_eigen_condition(la, lb)))
            .collect::<Vec<_>>()
    });
    let mut min_det = f64::INFINITY;
    let mut min_det_at = 0.0;
    for k in 0..grid_points {
        let u = k as f64 / (grid_points - 1) as f64;
        let d = sys.z(u, 0.0)?.determinant()?.norm();
        if d < min_det {
            min_det = d;
            min_det_at = u;
        }
    }
    Ok(ZInvertibilityReport { analytic, min_det, min_det_at, grid_points })
}

/// Post-solve checks on a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryReport {
    /// `max_n |x(n⁻) − x(n)|` over interior integers.
    pub continuity_gap: f64,
    pub continuity_limit: f64,
    /// `max |x′ − Ax − Bx([t]) − f|` over sampled interior points.
    pub residual: f64,
    pub residual_limit: f64,
    /// `max |x(n+1) − Cx(n) − h(n)|` on the integer samples.
    pub recursion_residual: f64,
    pub sup_norm: f64,
}

impl TrajectoryReport {
    pub fn passed(&self) -> bool {
        self.continuity_gap <= self.continuity_limit && self.residual <= self.residual_limit
    }
}

/// Continuous solution on `[n0, n1 + 1]` stitched from unit segments.
#[derive(Clone)]
pub struct HybridTrajectory {
    pub n0: i64,
    pub n1: i64,
    dim: usize,
    /// `x(n)` for `n ∈ [n0, n1 + 1]`.
    samples: Vec<CVector>,
    /// `(n, u) ↦ x(n + u)` for `u ∈ [0, 1]`, computed from `x(n)`.
    segment: SegmentFn,
    pub report: Option<TrajectoryReport>,
    pub certificate: Option<DichotomyCertificate>,
}

impl fmt::Debug for HybridTrajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HybridTrajectory")
            .field("n0", &self.n0)
            .field("n1", &self.n1)
            .field("dim", &self.dim)
            .field("report", &self.report)
            .finish_non_exhaustive()
    }
}

impl HybridTrajectory {
    pub fn from_parts(n0: i64, n1: i64, dim: usize, samples: Vec<CVector>, segment: SegmentFn) -> Self {
        assert_eq!(samples.len() as i64, n1 - n0 + 2, "samples must cover [n0, n1 + 1]");
        Self { n0, n1, dim, samples, segment, report: None, certificate: None }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(n0, n1 + 1)`.
    pub fn domain(&self) -> (f64, f64) {
        (self.n0 as f64, (self.n1 + 1) as f64)
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = self.domain();
        t >= lo && t <= hi
    }

    pub fn sample(&self, n: i64) -> Option<&CVector> {
        usize::try_from(n - self.n0).ok().and_then(|i| self.samples.get(i))
    }

    pub fn samples(&self) -> &[CVector] {
        &self.samples
    }

    /// `x(t)`, or `None` outside the domain.
    pub fn evaluate(&self, t: f64) -> Option<CVector> {
        if !self.contains(t) {
            return None;
        }
        let n = t.floor() as i64;
        if n > self.n1 {
            return self.sample(n).cloned();
        }
        Some((self.segment)(n, t - n as f64))
    }

    /// `lim_{t→n⁻} x(t)`, from the segment on `[n−1, n)`.
    pub fn left_limit(&self, n: i64) -> Option<CVector> {
        if n - 1 < self.n0 || n - 1 > self.n1 {
            return None;
        }
        Some((self.segment)(n - 1, 1.0))
    }

    /// `max |x|` over the integer samples and a grid of step `1/16`.
    pub fn sup_norm(&self) -> f64 {
        let mut worst = self.samples.iter().map(vec_norm).fold(0.0, f64::max);
        for n in self.n0..=self.n1 {
            for k in 1..16 {
                worst = worst.max(vec_norm(&(self.segment)(n, k as f64 / 16.0)));
            }
        }
        worst
    }

    /// The trajectory as a forcing signal; NaN outside the domain.
    pub fn as_signal(&self, sup_bound: f64, label: &str) -> ForcingSignal {
        let me = self.clone();
        let dim = self.dim;
        ForcingSignal::evaluator(
            dim,
            sup_bound,
            label,
            Arc::new(move |t| me.evaluate(t).unwrap_or_else(|| CVector::from_element(dim, cplx(f64::NAN)))),
        )
    }

    /// Linear image `M·x`, sharing the integer samples structure.
    pub fn map(&self, m: &Matrix) -> HybridTrajectory {
        let samples = self.samples.iter().map(|v| m.mul_vec(v)).collect();
        let inner = self.segment.clone();
        let m2 = m.clone();
        HybridTrajectory {
            n0: self.n0,
            n1: self.n1,
            dim: m.rows(),
            samples,
            segment: Arc::new(move |n, u| m2.mul_vec(&inner(n, u))),
            report: self.report.clone(),
            certificate: None,
        }
    }
}

/// Data shared by the direct solver and the cascade: the companion
/// certificate and the window of `h` the Green series will read.
#[derive(Debug, Clone)]
pub struct SolvePlan {
    pub companion: Matrix,
    pub certificate: DichotomyCertificate,
    /// Bound on `sup_n |h(n)|`.
    pub sup_h: f64,
    /// Truncation radius of the Green series.
    pub radius: usize,
    /// A-priori bound on `sup_t |x(t)|`.
    pub solution_bound: f64,
    pub quad_tol: f64,
}

impl SolvePlan {
    /// Forcing must be available on `[n0 − N, n1 + N + 2]` to solve on `[n0, n1]`.
    pub fn forcing_window(&self, n0: i64, n1: i64) -> (i64, i64) {
        let r = self.radius as i64;
        (n0 - r, n1 + r + 2)
    }
}

/// Certificate, truncation radius and a-priori bound for a system whose
/// forcing is bounded by `sup_f`.
pub fn plan(sys: &DepcaSystem, sup_f: f64, tol: f64) -> Result<SolvePlan, DepcaError> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(DepcaError::InvalidArgument(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    let companion = sys.companion_matrix()?;
    let det = companion.determinant()?.norm();
    if det < Tolerances::DEFAULT.z_det {
        return Err(DepcaError::SingularC { det });
    }
    let certificate = certify_constant(&companion).map_err(|e| match e {
        DifferenceError::NoDichotomy(msg) => DepcaError::NoDichotomy(msg),
        other => other.into(),
    })?;
    let exp_bound = sys.exp_norm_bound()?;
    let sup_h = exp_bound * sup_f;
    let radius = truncation_radius(certificate.k, certificate.alpha, sup_h, tol);
    let solution_bound = sys.z_norm_bound()? * certificate.bound_factor() * sup_h + exp_bound * sup_f;
    // Green-series amplification of quadrature error in h
    let quad_tol = tol / (10.0 * certificate.bound_factor().max(1.0));
    Ok(SolvePlan { companion, certificate, sup_h, radius, solution_bound, quad_tol })
}

/// Unique bounded solution on `[n0, n1 + 1]`, verified for continuity and
/// ODE residual.
pub fn solve_bounded_depca(sys: &DepcaSystem, n0: i64, n1: i64, tol: f64) -> Result<HybridTrajectory, DepcaError> {
    let report = check_z_invertibility(sys, Z_GRID_POINTS)?;
    if let Some((i, u)) = report.analytic_failure() {
        return Err(DepcaError::ZNotInvertible(format!(
            "eigen condition (λ_B·u = −1 form) violated on diagonal pair {i} at u = {u:.12}"
        )));
    }
    if !report.passed() {
        return Err(DepcaError::ZNotInvertible(format!(
            "|det Z(u)| = {:e} at u = {}",
            report.min_det, report.min_det_at
        )));
    }
    let plan = plan(sys, sys.f.sup_bound(), tol)?;
    solve_with_plan(sys, &plan, n0, n1, tol)
}

/// [`solve_bounded_depca`] with a precomputed plan and no determinant screen.
pub fn solve_with_plan(
    sys: &DepcaSystem,
    plan: &SolvePlan,
    n0: i64,
    n1: i64,
    tol: f64,
) -> Result<HybridTrajectory, DepcaError> {
    if n1 < n0 {
        return Err(DepcaError::InvalidArgument(format!("empty window [{n0}, {n1}]")));
    }
    // samples are needed on [n0, n1 + 1]
    let (lo, hi) = plan.forcing_window(n0, n1 + 1);
    let mut table = Vec::with_capacity((hi - lo + 1) as usize);
    for k in lo..=hi {
        let h = sys.companion_forcing(k, plan.quad_tol)?;
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(DepcaError::InvalidArgument(format!("forcing is not finite near t = {k}")));
        }
        table.push(h);
    }
    let table = Arc::new(table);
    let fallback = sys.clone();
    let quad_tol = plan.quad_tol;
    let h_lookup = {
        let table = table.clone();
        Arc::new(move |k: i64| match usize::try_from(k - lo).ok().and_then(|i| table.get(i)) {
            Some(v) => v.clone(),
            None => fallback
                .companion_forcing(k, quad_tol)
                .unwrap_or_else(|_| CVector::from_element(fallback.dim(), cplx(f64::NAN))),
        })
    };
    let dsys = DifferenceSystem::constant(plan.companion.clone(), h_lookup, Some(plan.sup_h))?;
    let discrete: DiscreteSolution = solve_bounded(&dsys, &plan.certificate, n0, n1 + 1, tol)?;
    let recursion_residual = dsys.recursion_residual(n0, &discrete.values)?;

    let samples = Arc::new(discrete.values.clone());
    let owned = sys.clone();
    let seg_samples = samples.clone();
    let segment: SegmentFn = Arc::new(move |n: i64, u: f64| {
        let xn = &seg_samples[(n - n0) as usize];
        let z = owned.z(n as f64 + u, n as f64).expect("u within the unit interval");
        let h = if u >= 1.0 {
            // exact left limit at n+1 is the companion forcing
            owned.companion_forcing(n, quad_tol)
        } else {
            propagate_forcing(&owned.a, &owned.f, n as f64, n as f64 + u, quad_tol)
        };
        let h = h.unwrap_or_else(|_| CVector::from_element(owned.dim(), cplx(f64::NAN)));
        z.mul_vec(xn) + h
    });
    let mut traj = HybridTrajectory::from_parts(n0, n1, sys.dim(), discrete.values, segment);
    let report = verify_trajectory(sys, &traj, tol, recursion_residual);
    if report.continuity_gap > report.continuity_limit {
        let n = (n0 + 1..=n1 + 1)
            .find(|&n| {
                traj.left_limit(n).map(|l| vec_norm(&(l - traj.sample(n).unwrap()))).unwrap_or(0.0)
                    > report.continuity_limit
            })
            .unwrap_or(n0);
        return Err(DepcaError::ContinuityBreach { n, gap: report.continuity_gap, limit: report.continuity_limit });
    }
    traj.report = Some(report);
    traj.certificate = Some(plan.certificate.clone());
    Ok(traj)
}

/// Continuity at integers and central-difference ODE residual at
/// `k/8, k = 1..7` inside every unit interval.
pub fn verify_trajectory(sys: &DepcaSystem, x: &HybridTrajectory, tol: f64, recursion_residual: f64) -> TrajectoryReport {
    let t = Tolerances::DEFAULT;
    let mut continuity_gap: f64 = 0.0;
    for n in x.n0 + 1..=x.n1 + 1 {
        if let (Some(left), Some(at)) = (x.left_limit(n), x.sample(n)) {
            continuity_gap = continuity_gap.max(vec_norm(&(left - at)));
        }
    }
    let sup_norm = x.sup_norm();
    let delta = t.residual_step;
    let mut residual: f64 = 0.0;
    for n in x.n0..=x.n1 {
        let xn = x.sample(n).expect("sample in window");
        let bx = sys.b.mul_vec(xn);
        for k in 1..=RESIDUAL_POINTS {
            let u = k as f64 / (RESIDUAL_POINTS + 1) as f64;
            let plus = (x.segment)(n, u + delta);
            let minus = (x.segment)(n, u - delta);
            let mid = (x.segment)(n, u);
            let derivative = (plus - minus) * cplx(0.5 / delta);
            let r = derivative - sys.a.mul_vec(&mid) - &bx - sys.f.evaluate(n as f64 + u);
            residual = residual.max(vec_norm(&r));
        }
    }
    let scale = 1.0 + sys.a.norm_inf() + sys.b.norm_inf();
    TrajectoryReport {
        continuity_gap,
        continuity_limit: t.continuity_factor * tol,
        residual,
        residual_limit: t.residual_scale * scale * sup_norm + RESIDUAL_FLOOR,
        recursion_residual,
        sup_norm,
    }
}

/// How [`massera_solve`] treats exponential terms of the forcing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MasseraMethod {
    /// `e^{iωt}(iωI − A)⁻¹c` for exponential terms, quadrature for the rest.
    Auto,
    /// Truncated improper integrals for every term.
    Quadrature,
}

/// Bounded solution of `x′ = Ax + f` for hyperbolic `A`.
#[derive(Clone)]
pub struct MasseraSolution {
    pub dim: usize,
    /// Truncation radius of both improper integrals.
    pub radius: f64,
    pub decay: f64,
    pub k_stable: f64,
    pub k_unstable: f64,
    eval: Arc<dyn Fn(f64) -> Result<CVector, DepcaError> + Send + Sync>,
}

impl fmt::Debug for MasseraSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MasseraSolution")
            .field("dim", &self.dim)
            .field("radius", &self.radius)
            .field("decay", &self.decay)
            .finish_non_exhaustive()
    }
}

impl MasseraSolution {
    pub fn evaluate(&self, t: f64) -> Result<CVector, DepcaError> {
        (self.eval)(t)
    }
}

/// `x(t) = ∫_{−∞}^t e^{A(t−s)}Pf(s) ds − ∫_t^{∞} e^{A(t−s)}Qf(s) ds`.
pub fn massera_solve(a: &Matrix, f: &ForcingSignal, tol: f64) -> Result<MasseraSolution, DepcaError> {
    massera_solve_with(a, f, tol, MasseraMethod::Auto)
}

pub fn massera_solve_with(
    a: &Matrix,
    f: &ForcingSignal,
    tol: f64,
    method: MasseraMethod,
) -> Result<MasseraSolution, DepcaError> {
    let p = a.require_square()?;
    if f.dim() != p {
        return Err(DepcaError::DimensionMismatch(format!("A is {p}x{p}, f has {} components", f.dim())));
    }
    if !(tol > 0.0) {
        return Err(DepcaError::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let split = spectral_split(a, SplitMode::Continuous).map_err(|e| match e {
        MatrixError::BoundaryEigenvalue { eigenvalue, .. } => {
            DepcaError::NoDichotomy(format!("eigenvalue {eigenvalue} of A lies on the imaginary axis"))
        }
        other => other.into(),
    })?;
    let proj_p = split.stable_projection.clone();
    let proj_q = split.unstable_projection.clone();
    // e^{Ar}P = e^{(AP)r}P and e^{−Ar}Q = e^{−(AQ)r}Q keep both kernels bounded
    let ap = a * &proj_p;
    let aq = a * &proj_q;
    let decay = 0.9 * split.decay_rate();
    let sampled_k = |m: &Matrix, proj: &Matrix| -> Result<f64, DepcaError> {
        if proj.max_abs() == 0.0 {
            return Ok(0.0);
        }
        let horizon = 10.0 / decay;
        let mut worst: f64 = 0.0;
        for k in 0..=200 {
            let s = horizon * k as f64 / 200.0;
            worst = worst.max((&expm(m, s)? * proj).norm_inf() * (decay * s).exp());
        }
        Ok(NORM_MARGIN * worst)
    };
    let k_stable = sampled_k(&ap, &proj_p)?;
    let k_unstable = sampled_k(&(-&aq), &proj_q)?;

    let (terms, rest) = match method {
        MasseraMethod::Auto => f.split_trig(),
        MasseraMethod::Quadrature => (Vec::new(), vec![f.clone()]),
    };
    let remainder = if rest.is_empty() { None } else { Some(ForcingSignal::sum(rest).expect("same dimension")) };
    let sup_rest = remainder.as_ref().map(|r| r.sup_bound()).unwrap_or(0.0);
    let kmax = k_stable.max(k_unstable);
    let radius = if sup_rest > 0.0 { ((kmax * sup_rest / (tol * decay)).ln() / decay).max(1.0) } else { 0.0 };

    // (iωI − A)⁻¹c per exponential term
    let mut resolvents = Vec::with_capacity(terms.len());
    for term in &terms {
        let shifted = &Matrix::identity(p).scale(Complex64::new(0.0, term.frequency)) - a;
        resolvents.push((term.frequency, shifted.solve_vec(&term.coefficient)?));
    }
    let quad_tol = 0.25 * tol;
    let eval = Arc::new(move |t: f64| -> Result<CVector, DepcaError> {
        let mut acc = CVector::zeros(p);
        for (w, v) in &resolvents {
            acc += v * Complex64::new(0.0, w * t).exp();
        }
        if let Some(g) = &remainder {
            if k_stable > 0.0 {
                let integrand =
                    |s: f64| (&expm(&ap, t - s).expect("bounded kernel") * &proj_p).mul_vec(&g.evaluate(s));
                acc += integrate_split_at_integers(&integrand, t - radius, t, p, quad_tol)?;
            }
            if k_unstable > 0.0 {
                let integrand =
                    |s: f64| (&expm(&aq, t - s).expect("bounded kernel") * &proj_q).mul_vec(&g.evaluate(s));
                acc -= integrate_split_at_integers(&integrand, t, t + radius, p, quad_tol)?;
            }
        }
        Ok(acc)
    });
    Ok(MasseraSolution { dim: p, radius, decay, k_stable, k_unstable, eval })
}

/// `x(t) = e^{iθt}(x0 + ∫₀ᵗ e^{−iθs} f(s) ds)` on `[−window, window]`.
#[derive(Clone)]
pub struct RotationSolution {
    pub theta: f64,
    pub window: f64,
    /// Primitive of `e^{−iθs}f(s)` on the grid `k·step`.
    grid: Arc<Vec<(f64, Complex64)>>,
    step: f64,
    x0: Complex64,
    integrand: ForcingSignal,
}

impl fmt::Debug for RotationSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RotationSolution").field("theta", &self.theta).field("window", &self.window).finish_non_exhaustive()
    }
}

/// Cells per unit interval of the cumulative primitive.
const ROTATION_CELLS: usize = 8;

impl RotationSolution {
    pub fn evaluate(&self, t: f64) -> Option<Complex64> {
        if t.abs() > self.window {
            return None;
        }
        let mut k = (t / self.step).floor() as i64;
        let offset = (self.grid.len() / 2) as i64;
        k = k.clamp(-offset, offset);
        let (tk, fk) = self.grid[(k + offset) as usize];
        let g = |s: f64| self.integrand.evaluate(s);
        let tail = if t >= tk {
            crate::quadrature::gauss_legendre(&g, tk, t, 1)[0]
        } else {
            -crate::quadrature::gauss_legendre(&g, t, tk, 1)[0]
        };
        Some(Complex64::new(0.0, self.theta * t).exp() * (self.x0 + fk + tail))
    }

    /// `max |x|` on a grid of step `1/ROTATION_CELLS`.
    pub fn sup_norm(&self) -> f64 {
        self.grid.iter().map(|(t, _)| self.evaluate(*t).map(|z| z.norm()).unwrap_or(0.0)).fold(0.0, f64::max)
    }
}

/// Scalar `x′ = iθx + f` solved by cumulative quadrature, with the
/// boundedness screen of the primitive of `e^{−iθs}f(s)`.
pub fn purely_imaginary_scalar(
    theta: f64,
    f: &ForcingSignal,
    x0: Complex64,
    window: f64,
) -> Result<(RotationSolution, PrimitiveReport), DepcaError> {
    if f.dim() != 1 {
        return Err(DepcaError::DimensionMismatch(format!("scalar path needs a scalar forcing, got {}", f.dim())));
    }
    if !(window > 0.0) {
        return Err(DepcaError::InvalidArgument(format!("window must be positive, got {window}")));
    }
    let integrand = ForcingSignal::modulated(-theta, f.clone());
    let step = 1.0 / ROTATION_CELLS as f64;
    let cells = (window * ROTATION_CELLS as f64).ceil() as i64;
    let g = |s: f64| integrand.evaluate(s);
    // primitive on k·step for k ∈ [−cells, cells]; cells never straddle an integer
    let mut forward = vec![(0.0, Complex64::new(0.0, 0.0))];
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..cells {
        let (a, b) = (k as f64 * step, (k + 1) as f64 * step);
        acc += crate::quadrature::gauss_legendre(&g, a, b, 1)[0];
        forward.push((b, acc));
    }
    let mut backward = Vec::new();
    acc = Complex64::new(0.0, 0.0);
    for k in 0..cells {
        let (a, b) = (-((k + 1) as f64) * step, -(k as f64) * step);
        acc -= crate::quadrature::gauss_legendre(&g, a, b, 1)[0];
        backward.push((a, acc));
    }
    backward.reverse();
    backward.extend(forward);
    let report = integral_primitive_bounded(&integrand, window, 0.05);
    Ok((RotationSolution { theta, window, grid: Arc::new(backward), step, x0, integrand }, report))
}
