//! Bounded solutions of `x(n+1) = C(n)x(n) + h(n)` under an exponential
//! dichotomy, via the discrete Green function series.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::matrix_core::{eigenvalues, spectral_split_with, vec_norm, CVector, Matrix, MatrixError, SplitMode};
use crate::signals::ShiftSequence;
use crate::tolerances::Tolerances;

pub type ForcingFn = Arc<dyn Fn(i64) -> CVector + Send + Sync>;
pub type CoefficientFn = Arc<dyn Fn(i64) -> Matrix + Send + Sync>;

/// Pairs `|m − l|` sampled when estimating `K` for a constant coefficient.
pub const K_SAMPLE_RADIUS: i64 = 60;
/// Multiplier on the sampled `K`.
pub const K_INFLATION: f64 = 1.05;
/// Fraction of the spectral gap used as the certified rate `α`.
pub const ALPHA_SAFETY: f64 = 0.9;
/// Half-width on which the jump identity is evaluated; cond(Y(n)) grows geometrically in |n|.
const JUMP_WINDOW: i64 = 4;

/// Window on which `solve_bounded` re-verifies a certificate before use.
const PRE_SOLVE_WINDOW: i64 = 12;
/// Term size at which the brute-force oracle stops.
const ORACLE_CUTOFF: f64 = 1e-14;
const ORACLE_MAX_TERMS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DifferenceError {
    #[error("C({n}) is singular: |det| = {det:e}")]
    SingularCoefficient { n: i64, det: f64 },
    #[error("no exponential dichotomy: {0}")]
    NoDichotomy(String),
    #[error("certificate rejected: {0}")]
    InvalidCertificate(String),
    #[error("oracle requires a purely stable or purely unstable spectrum")]
    MixedSpectrum,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// `n ↦ C(n)`.
#[derive(Clone)]
pub enum Coefficient {
    Constant(Matrix),
    /// `C(n) = mats[n mod len]`.
    Periodic(Vec<Matrix>),
    Rule(CoefficientFn),
}

impl Coefficient {
    pub fn at(&self, n: i64) -> Matrix {
        match self {
            Coefficient::Constant(c) => c.clone(),
            Coefficient::Periodic(mats) => mats[n.rem_euclid(mats.len() as i64) as usize].clone(),
            Coefficient::Rule(rule) => rule(n),
        }
    }

    pub fn constant(&self) -> Option<&Matrix> {
        match self {
            Coefficient::Constant(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Coefficient::Periodic(m) => f.debug_tuple("Periodic").field(m).finish(),
            Coefficient::Rule(_) => f.write_str("Rule(..)"),
        }
    }
}

/// `x(n+1) = C(n)x(n) + h(n)`.
#[derive(Clone)]
pub struct DifferenceSystem {
    dim: usize,
    coefficient: Coefficient,
    forcing: ForcingFn,
    /// Known bound on `sup_n |h(n)|`; sampled when absent.
    forcing_bound: Option<f64>,
}

impl fmt::Debug for DifferenceSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DifferenceSystem")
            .field("dim", &self.dim)
            .field("coefficient", &self.coefficient)
            .field("forcing_bound", &self.forcing_bound)
            .finish_non_exhaustive()
    }
}

fn check_det(c: &Matrix, n: i64) -> Result<(), DifferenceError> {
    let det = c.determinant()?.norm();
    if det < Tolerances::DEFAULT.coefficient_det {
        return Err(DifferenceError::SingularCoefficient { n, det });
    }
    Ok(())
}

impl DifferenceSystem {
    pub fn new(
        dim: usize,
        coefficient: Coefficient,
        forcing: ForcingFn,
        forcing_bound: Option<f64>,
    ) -> Result<Self, DifferenceError> {
        let check_shape = |c: &Matrix| {
            if c.rows() != dim || c.cols() != dim {
                Err(DifferenceError::DimensionMismatch(format!("C is {}x{}, expected {dim}x{dim}", c.rows(), c.cols())))
            } else {
                Ok(())
            }
        };
        match &coefficient {
            Coefficient::Constant(c) => {
                check_shape(c)?;
                check_det(c, 0)?;
            }
            Coefficient::Periodic(mats) => {
                if mats.is_empty() {
                    return Err(DifferenceError::DimensionMismatch("empty periodic coefficient".into()));
                }
                for (n, c) in mats.iter().enumerate() {
                    check_shape(c)?;
                    check_det(c, n as i64)?;
                }
            }
            Coefficient::Rule(rule) => check_shape(&rule(0))?,
        }
        let h0 = forcing(0);
        if h0.len() != dim {
            return Err(DifferenceError::DimensionMismatch(format!("h has {} components, expected {dim}", h0.len())));
        }
        Ok(Self { dim, coefficient, forcing, forcing_bound })
    }

    pub fn constant(c: Matrix, forcing: ForcingFn, forcing_bound: Option<f64>) -> Result<Self, DifferenceError> {
        Self::new(c.rows(), Coefficient::Constant(c), forcing, forcing_bound)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coefficient(&self) -> &Coefficient {
        &self.coefficient
    }

    /// `C(n)`, rejected when singular.
    pub fn c(&self, n: i64) -> Result<Matrix, DifferenceError> {
        let c = self.coefficient.at(n);
        if !matches!(self.coefficient, Coefficient::Constant(_) | Coefficient::Periodic(_)) {
            check_det(&c, n)?;
        }
        Ok(c)
    }

    pub fn h(&self, n: i64) -> CVector {
        (self.forcing)(n)
    }

    pub fn forcing_bound(&self) -> Option<f64> {
        self.forcing_bound
    }

    /// Same coefficient, new forcing.
    pub fn with_forcing(&self, forcing: ForcingFn, forcing_bound: Option<f64>) -> Self {
        Self { dim: self.dim, coefficient: self.coefficient.clone(), forcing, forcing_bound }
    }

    /// `‖x(n+1) − C(n)x(n) − h(n)‖` maximized over consecutive samples starting at `n0`.
    pub fn recursion_residual(&self, n0: i64, x: &[CVector]) -> Result<f64, DifferenceError> {
        let mut worst: f64 = 0.0;
        for (j, pair) in x.windows(2).enumerate() {
            let n = n0 + j as i64;
            let r = &pair[1] - self.c(n)?.mul_vec(&pair[0]) - self.h(n);
            worst = worst.max(vec_norm(&r));
        }
        Ok(worst)
    }
}

/// Parameters `(α, K, P)` of an exponential dichotomy, with the fundamental
/// matrix `Y(n+1) = C(n)Y(n)`, `Y(0) = I` generated from `coefficient`.
#[derive(Debug, Clone)]
pub struct DichotomyCertificate {
    pub alpha: f64,
    pub k: f64,
    pub projection: Matrix,
    pub coefficient: Coefficient,
}

impl DichotomyCertificate {
    /// User-supplied parameters with `Y` generated by the recursion.
    pub fn from_recursion(alpha: f64, k: f64, projection: Matrix, coefficient: Coefficient) -> Result<Self, DifferenceError> {
        if !(alpha > 0.0 && alpha.is_finite()) || !(k > 0.0 && k.is_finite()) {
            return Err(DifferenceError::InvalidCertificate(format!("need α > 0 and K > 0, got α = {alpha}, K = {k}")));
        }
        projection.require_square()?;
        Ok(Self { alpha, k, projection, coefficient })
    }

    pub fn dim(&self) -> usize {
        self.projection.rows()
    }

    /// `Y(n)` for every `n ∈ [lo, hi]` (the range is widened to contain 0).
    pub fn fundamental_range(&self, lo: i64, hi: i64) -> Result<FundamentalTable, DifferenceError> {
        let lo = lo.min(0);
        let hi = hi.max(0);
        let p = self.dim();
        let mut values = vec![Matrix::identity(p); (hi - lo + 1) as usize];
        let idx = |n: i64| (n - lo) as usize;
        for n in 0..hi {
            values[idx(n + 1)] = &self.coefficient.at(n) * &values[idx(n)];
        }
        for n in (lo + 1..=0).rev() {
            let c = self.coefficient.at(n - 1);
            check_det(&c, n - 1)?;
            values[idx(n - 1)] = c.solve(&values[idx(n)])?;
        }
        Ok(FundamentalTable { lo, values })
    }

    /// Green function evaluator on `[lo, hi]²`.
    pub fn green(&self, lo: i64, hi: i64) -> Result<GreenFunction, DifferenceError> {
        GreenFunction::new(self.clone(), lo, hi)
    }

    /// `K(1 + e^{−α})/(1 − e^{−α})`, the factor in front of `sup|h|`.
    pub fn bound_factor(&self) -> f64 {
        let q = (-self.alpha).exp();
        self.k * (1.0 + q) / (1.0 - q)
    }
}

/// `Y(n)` for `n ∈ [lo, lo + len)`.
#[derive(Debug, Clone)]
pub struct FundamentalTable {
    lo: i64,
    values: Vec<Matrix>,
}

impl FundamentalTable {
    pub fn get(&self, n: i64) -> Option<&Matrix> {
        usize::try_from(n - self.lo).ok().and_then(|i| self.values.get(i))
    }

    pub fn range(&self) -> (i64, i64) {
        (self.lo, self.lo + self.values.len() as i64 - 1)
    }
}

#[derive(Debug, Clone)]
enum GreenTable {
    /// Constant coefficient: `G(m, l)` depends on `m − l` only.
    ByDifference { radius: i64, mats: Vec<Matrix> },
    Fundamental(FundamentalTable),
}

/// `G(m,l) = Y(m)PY⁻¹(l)` for `m ≥ l`, `−Y(m)(I−P)Y⁻¹(l)` for `m < l`.
#[derive(Debug, Clone)]
pub struct GreenFunction {
    pub certificate: DichotomyCertificate,
    lo: i64,
    hi: i64,
    table: GreenTable,
}

impl GreenFunction {
    pub fn new(certificate: DichotomyCertificate, lo: i64, hi: i64) -> Result<Self, DifferenceError> {
        let table = match certificate.coefficient.constant() {
            Some(c) => {
                let radius = hi - lo + 1;
                let p = &certificate.projection;
                let q = &Matrix::identity(p.rows()) - p;
                // powers of CP and C⁻¹Q re-project every step, so rounding in
                // the complementary subspace is never amplified
                let cp = c * p;
                let ciq = c.solve(&q)?;
                let mut forward = vec![p.clone()];
                for j in 0..radius as usize {
                    forward.push(&cp * &forward[j]);
                }
                let mut backward = vec![ciq.clone()];
                for j in 0..(radius as usize).saturating_sub(1) {
                    backward.push(&ciq * &backward[j]);
                }
                // index d + radius for d = m − l ∈ [−radius, radius]
                let mut mats = Vec::with_capacity(2 * radius as usize + 1);
                for d in -radius..=radius {
                    mats.push(if d >= 0 { forward[d as usize].clone() } else { -&backward[(-d - 1) as usize] });
                }
                GreenTable::ByDifference { radius, mats }
            }
            None => GreenTable::Fundamental(certificate.fundamental_range(lo, hi)?),
        };
        Ok(Self { certificate, lo, hi, table })
    }

    pub fn range(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn at(&self, m: i64, l: i64) -> Result<Matrix, DifferenceError> {
        match &self.table {
            GreenTable::ByDifference { radius, mats } => {
                let d = m - l;
                if d.abs() > *radius {
                    return Err(DifferenceError::Internal(format!("G({m}, {l}) outside the tabulated radius {radius}")));
                }
                Ok(mats[(d + radius) as usize].clone())
            }
            GreenTable::Fundamental(table) => {
                let (ym, yl) = match (table.get(m), table.get(l)) {
                    (Some(a), Some(b)) => (a, b),
                    _ => {
                        return Err(DifferenceError::Internal(format!(
                            "G({m}, {l}) outside the tabulated range {:?}",
                            table.range()
                        )))
                    }
                };
                let p = &self.certificate.projection;
                let lhs = if m >= l { ym * p } else { -(ym * &(&Matrix::identity(p.rows()) - p)) };
                Ok(yl.solve_right(&lhs)?)
            }
        }
    }
}

/// Largest-eigenvalue-magnitude-based certificate for a constant coefficient.
pub fn certify_constant(c: &Matrix) -> Result<DichotomyCertificate, DifferenceError> {
    certify_constant_with(c, &Tolerances::DEFAULT)
}

pub fn certify_constant_with(c: &Matrix, tol: &Tolerances) -> Result<DichotomyCertificate, DifferenceError> {
    c.require_square()?;
    check_det(c, 0)?;
    let split = spectral_split_with(c, SplitMode::Discrete, tol).map_err(|e| match e {
        MatrixError::BoundaryEigenvalue { eigenvalue, .. } => {
            DifferenceError::NoDichotomy(format!("eigenvalue {eigenvalue} lies on the unit circle"))
        }
        other => other.into(),
    })?;
    let alpha = ALPHA_SAFETY * split.decay_rate();
    let mut cert = DichotomyCertificate {
        alpha,
        k: 1.0,
        projection: split.stable_projection,
        coefficient: Coefficient::Constant(c.clone()),
    };
    let green = cert.green(0, K_SAMPLE_RADIUS)?;
    let mut k: f64 = 0.0;
    for d in -K_SAMPLE_RADIUS..=K_SAMPLE_RADIUS {
        let g = if d >= 0 { green.at(d, 0)? } else { green.at(0, -d)? };
        k = k.max(g.norm_inf() * (alpha * d.abs() as f64).exp());
    }
    cert.k = K_INFLATION * k.max(f64::MIN_POSITIVE);
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub window: i64,
    /// `min (K e^{−α|m−l|} − |G(m,l)|)` relative to `K e^{−α|m−l|}`.
    pub worst_decay_margin: f64,
    /// Pair attaining the worst decay margin.
    pub worst_pair: (i64, i64),
    /// `max ‖Y(n+1) − C(n)Y(n)‖ / max(1, ‖Y(n+1)‖)`.
    pub recursion_residual: f64,
    pub idempotency_residual: f64,
    /// `max ‖G(l,l) + Y(l)(I−P)Y⁻¹(l) − I‖`.
    pub jump_residual: f64,
    pub decay_ok: bool,
    pub recursion_ok: bool,
    pub projection_ok: bool,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.decay_ok && self.recursion_ok && self.projection_ok
    }
}

/// Checks the decay inequality on `[−window, window]²`, the recursion for
/// `Y` against the system's `C(n)` and idempotency of `P`.
pub fn verify_certificate(
    sys: &DifferenceSystem,
    cert: &DichotomyCertificate,
    window: i64,
) -> Result<CertificateReport, DifferenceError> {
    let tol = Tolerances::DEFAULT;
    let window = window.max(1);
    if cert.dim() != sys.dim() {
        return Err(DifferenceError::DimensionMismatch(format!(
            "certificate is for dimension {}, system has {}",
            cert.dim(),
            sys.dim()
        )));
    }
    let green = cert.green(-window, window)?;
    let mut worst_decay_margin = f64::INFINITY;
    let mut worst_pair = (0, 0);
    for m in -window..=window {
        for l in -window..=window {
            let allowed = cert.k * (-cert.alpha * (m - l).abs() as f64).exp();
            let margin = (allowed - green.at(m, l)?.norm_inf()) / allowed;
            if margin < worst_decay_margin {
                worst_decay_margin = margin;
                worst_pair = (m, l);
            }
        }
    }

    let ys = cert.fundamental_range(-window, window + 1)?;
    let get = |n: i64| ys.get(n).expect("tabulated");
    let mut recursion_residual: f64 = 0.0;
    let mut jump_residual: f64 = 0.0;
    let p = &cert.projection;
    let id = Matrix::identity(p.rows());
    let q = &id - p;
    for n in -window..=window {
        let next = get(n + 1);
        let r = next.distance(&(&sys.c(n)? * get(n))) / next.max_abs().max(1.0);
        recursion_residual = recursion_residual.max(r);
        // G(l,l) + Y(l)QY⁻¹(l) = Y(l)(P + Q)Y⁻¹(l); Y is only well conditioned near 0
        if n.abs() <= JUMP_WINDOW {
            let y = get(n);
            let jump = &y.solve_right(&(y * p))? + &y.solve_right(&(y * &q))?;
            jump_residual = jump_residual.max(jump.distance(&id));
        }
    }
    let idempotency_residual = (p * p).distance(p);
    Ok(CertificateReport {
        window,
        worst_decay_margin,
        worst_pair,
        recursion_residual,
        idempotency_residual,
        jump_residual,
        // relative slack for rounding in G
        decay_ok: worst_decay_margin >= -1e-9,
        recursion_ok: recursion_residual <= tol.projection_idempotent,
        projection_ok: idempotency_residual <= tol.projection_idempotent,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftInvarianceReport {
    pub window: i64,
    /// `max_{m,l} ‖G(m+s, l+s) − G(m, l)‖` per shift, in input order.
    pub deviations: Vec<(i64, f64)>,
    pub max_deviation: f64,
    /// True when the coefficient is constant, so invariance is exact.
    pub autonomous: bool,
}

/// Sup deviation of `G(m+s, l+s)` from `G(m, l)` for each shift `s`.
pub fn bi_shift_invariance_check(
    green: &GreenFunction,
    shifts: &ShiftSequence,
    window: i64,
) -> Result<ShiftInvarianceReport, DifferenceError> {
    let cert = &green.certificate;
    let autonomous = cert.coefficient.constant().is_some();
    let smax = shifts.entries.iter().map(|s| s.abs()).max().unwrap_or(0);
    let wide = cert.green(-window - smax, window + smax)?;
    let mut deviations = Vec::with_capacity(shifts.len());
    for &s in &shifts.entries {
        let mut worst: f64 = 0.0;
        for m in -window..=window {
            for l in -window..=window {
                worst = worst.max(wide.at(m + s, l + s)?.distance(&wide.at(m, l)?));
            }
        }
        deviations.push((s, worst));
    }
    let max_deviation = deviations.iter().map(|d| d.1).fold(0.0, f64::max);
    Ok(ShiftInvarianceReport { window, deviations, max_deviation, autonomous })
}

/// Smallest `N` with `2K·e^{−αN}·sup|h| / (1 − e^{−α}) ≤ tol`, i.e. both
/// discarded tails of the Green series together stay below `tol`.
pub fn truncation_radius(k: f64, alpha: f64, sup_h: f64, tol: f64) -> usize {
    if sup_h <= 0.0 {
        return 0;
    }
    let n = ((2.0 * k).ln() + sup_h.ln() - (tol * (1.0 - (-alpha).exp())).ln()) / alpha;
    n.ceil().max(1.0) as usize
}

/// `x(n)` for `n ∈ [n0, n0 + len)`.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub n0: i64,
    pub values: Vec<CVector>,
    /// Truncation radius `N` of the Green series.
    pub radius: usize,
    /// `sup|h|` used to size the radius.
    pub sup_forcing: f64,
}

impl DiscreteSolution {
    pub fn n1(&self) -> i64 {
        self.n0 + self.values.len() as i64 - 1
    }

    pub fn at(&self, n: i64) -> Option<&CVector> {
        usize::try_from(n - self.n0).ok().and_then(|i| self.values.get(i))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(vec_norm).fold(0.0, f64::max)
    }
}

/// `x(n) = Σ_{|k−n| ≤ N} G(n, k+1) h(k)` for `n ∈ [n0, n1]`.
pub fn solve_bounded(
    sys: &DifferenceSystem,
    cert: &DichotomyCertificate,
    n0: i64,
    n1: i64,
    tol: f64,
) -> Result<DiscreteSolution, DifferenceError> {
    if n1 < n0 {
        return Err(DifferenceError::DimensionMismatch(format!("empty window [{n0}, {n1}]")));
    }
    if !(tol > 0.0) {
        return Err(DifferenceError::InvalidCertificate(format!("tolerance must be positive, got {tol}")));
    }
    let report = verify_certificate(sys, cert, PRE_SOLVE_WINDOW)?;
    if !report.passed() {
        return Err(DifferenceError::InvalidCertificate(format!(
            "decay margin {:.3e} at {:?}, recursion residual {:.3e}, idempotency residual {:.3e}",
            report.worst_decay_margin, report.worst_pair, report.recursion_residual, report.idempotency_residual
        )));
    }

    let sup_h = match sys.forcing_bound {
        Some(b) => b,
        None => {
            // sample generously around the window; the radius grows only logarithmically with sup|h|
            let pad = 64;
            (n0 - pad..=n1 + pad).map(|k| vec_norm(&sys.h(k))).fold(0.0, f64::max)
        }
    };
    let radius = truncation_radius(cert.k, cert.alpha, sup_h, tol);
    let r = radius as i64;
    let h: Vec<CVector> = (n0 - r..=n1 + r).map(|k| sys.h(k)).collect();
    if sup_h == 0.0 {
        if h.iter().any(|v| vec_norm(v) > 0.0) {
            return Err(DifferenceError::Internal("sup|h| estimated as 0 but h is nonzero on the window".into()));
        }
        return Ok(DiscreteSolution {
            n0,
            values: vec![CVector::zeros(sys.dim()); (n1 - n0 + 1) as usize],
            radius,
            sup_forcing: 0.0,
        });
    }
    // G(n, k+1) for n ∈ [n0, n1], k ∈ [n − N, n + N] needs indices up to n1 + N + 1
    let green = cert.green(n0 - r, n1 + r + 1)?;
    let mut values = Vec::with_capacity((n1 - n0 + 1) as usize);
    for n in n0..=n1 {
        let mut acc = CVector::zeros(sys.dim());
        for k in n - r..=n + r {
            acc += green.at(n, k + 1)?.mul_vec(&h[(k - (n0 - r)) as usize]);
        }
        values.push(acc);
    }
    Ok(DiscreteSolution { n0, values, radius, sup_forcing: sup_h })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub sup_solution: f64,
    /// `K(1 + e^{−α})/(1 − e^{−α})·sup|h|`.
    pub bound: f64,
    pub slack: f64,
    pub passed: bool,
}

/// `sup|x| ≤ K(1 + e^{−α})/(1 − e^{−α})·sup|h| + slack`.
pub fn bound_check(x: &DiscreteSolution, cert: &DichotomyCertificate, sup_h: f64, slack: f64) -> BoundReport {
    let sup_solution = x.sup_norm();
    let bound = cert.bound_factor() * sup_h;
    BoundReport { sup_solution, bound, slack, passed: sup_solution <= bound + slack }
}

/// Brute-force one-sided series for a constant coefficient whose spectrum
/// lies entirely inside (or entirely outside) the unit circle.
pub fn oracle_forward_sum(
    c: &Matrix,
    h: &dyn Fn(i64) -> CVector,
    n0: i64,
    n1: i64,
) -> Result<Vec<CVector>, DifferenceError> {
    let radii: Vec<f64> = eigenvalues(c)?.iter().map(|l| l.norm()).collect();
    let stable = if radii.iter().all(|&r| r < 1.0) {
        true
    } else if radii.iter().all(|&r| r > 1.0) {
        false
    } else {
        return Err(DifferenceError::MixedSpectrum);
    };
    // stable: x(n) = Σ_{j≥0} Cʲ h(n−1−j); unstable: x(n) = −Σ_{j≥0} C^{−(j+1)} h(n+j)
    let step = if stable { c.clone() } else { c.inverse()? };
    let mut out = Vec::with_capacity((n1 - n0 + 1).max(0) as usize);
    for n in n0..=n1 {
        let mut power = if stable { Matrix::identity(c.rows()) } else { step.clone() };
        let mut acc = CVector::zeros(c.rows());
        for j in 0..ORACLE_MAX_TERMS as i64 {
            let hk = if stable { h(n - 1 - j) } else { h(n + j) };
            let term = power.mul_vec(&hk);
            acc += &term;
            // stop when no later term can exceed the cutoff for |h| of this size
            if power.norm_inf() * vec_norm(&hk).max(1.0) < ORACLE_CUTOFF {
                break;
            }
            power = &step * &power;
        }
        out.push(if stable { acc } else { -acc });
    }
    Ok(out)
}

/// `h ≡ value`.
pub fn constant_forcing(value: CVector) -> ForcingFn {
    Arc::new(move |_| value.clone())
}

/// Helper for scalar coefficients.
pub fn scalar(x: f64) -> Matrix {
    Matrix::scalar(Complex64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_core::real_vector;
    use proptest::prelude::*;

    fn sys(c: Matrix, h: ForcingFn) -> DifferenceSystem {
        DifferenceSystem::constant(c, h, None).unwrap()
    }

    fn ones(p: usize) -> ForcingFn {
        constant_forcing(CVector::from_element(p, Complex64::new(1.0, 0.0)))
    }

    fn alternating() -> ForcingFn {
        Arc::new(|k| real_vector(&[if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 }]))
    }

    fn diag(d: &[f64]) -> Matrix {
        Matrix::from_diagonal(&d.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>())
    }

    #[test]
    fn certify_examples() {
        let half = certify_constant(&scalar(0.5)).unwrap();
        assert!(half.projection.distance(&scalar(1.0)) < 1e-14);
        assert!(half.alpha <= 2f64.ln());
        assert!((half.k - K_INFLATION).abs() < 1e-12);

        let two = certify_constant(&scalar(2.0)).unwrap();
        assert!(two.projection.max_abs() < 1e-14);
        let g = two.green(-5, 5).unwrap();
        for d in 1..5 {
            let expected = -(2f64.powi(-d as i32));
            assert!((g.at(0, d).unwrap()[(0, 0)].re - expected).abs() < 1e-14);
        }
        assert!(g.at(3, 1).unwrap().max_abs() < 1e-14);

        let split = certify_constant(&diag(&[0.5, 3.0])).unwrap();
        assert!(split.projection.distance(&diag(&[1.0, 0.0])) < 1e-14);

        assert!(matches!(certify_constant(&scalar(1.0)), Err(DifferenceError::NoDichotomy(_))));
        assert!(matches!(certify_constant(&scalar(0.0)), Err(DifferenceError::SingularCoefficient { .. })));
    }

    #[test]
    fn verify_examples() {
        let c = scalar(0.5);
        let s = sys(c.clone(), ones(1));
        let cert = certify_constant(&c).unwrap();
        let rep = verify_certificate(&s, &cert, 20).unwrap();
        assert!(rep.passed() && rep.worst_decay_margin >= 0.0, "{rep:?}");
        assert!(rep.jump_residual < 1e-12);

        let inflated = DichotomyCertificate { alpha: cert.alpha + 1.0, ..cert.clone() };
        let rep = verify_certificate(&s, &inflated, 20).unwrap();
        assert!(!rep.decay_ok);
        assert!(rep.worst_pair.0 != rep.worst_pair.1);

        assert!(verify_certificate(&s, &cert, 1).unwrap().passed());
    }

    #[test]
    fn mismatched_system_fails_recursion_check() {
        let cert = certify_constant(&scalar(0.5)).unwrap();
        let other = sys(scalar(0.4), ones(1));
        assert!(!verify_certificate(&other, &cert, 5).unwrap().recursion_ok);
    }

    #[test]
    fn solve_examples() {
        let zero = sys(scalar(0.5), constant_forcing(real_vector(&[0.0])));
        let cert = certify_constant(&scalar(0.5)).unwrap();
        let x = solve_bounded(&zero, &cert, -5, 5, 1e-10).unwrap();
        assert!(x.sup_norm() == 0.0);

        let s = sys(scalar(0.5), ones(1));
        let x = solve_bounded(&s, &cert, -10, 10, 1e-10).unwrap();
        assert!(x.values.iter().all(|v| (v[0].re - 2.0).abs() < 1e-10));

        let c2 = scalar(2.0);
        let s2 = sys(c2.clone(), ones(1));
        let x = solve_bounded(&s2, &certify_constant(&c2).unwrap(), -10, 10, 1e-10).unwrap();
        assert!(x.values.iter().all(|v| (v[0].re + 1.0).abs() < 1e-10));
        assert!(s2.recursion_residual(-10, &x.values).unwrap() < 3e-10);
    }

    #[test]
    fn bound_examples() {
        let c = scalar(0.5);
        let cert = certify_constant(&c).unwrap();
        let x = solve_bounded(&sys(c, ones(1)), &cert, -10, 10, 1e-10).unwrap();
        let rep = bound_check(&x, &cert, 1.0, 1e-10);
        assert!(rep.passed && rep.bound >= 3.0, "{rep:?}");

        let c2 = scalar(2.0);
        let cert2 = certify_constant(&c2).unwrap();
        let x = solve_bounded(&sys(c2, ones(1)), &cert2, -10, 10, 1e-10).unwrap();
        let rep = bound_check(&x, &cert2, 1.0, 1e-10);
        assert!(rep.passed && rep.bound >= 1.5);
    }

    #[test]
    fn oracle_examples() {
        let c = scalar(0.5);
        let h1 = |_k: i64| real_vector(&[1.0]);
        assert!(oracle_forward_sum(&c, &h1, 0, 3).unwrap().iter().all(|v| (v[0].re - 2.0).abs() < 1e-13));
        let alt = alternating();
        let x = oracle_forward_sum(&c, &*alt, -3, 3).unwrap();
        for (j, v) in x.iter().enumerate() {
            let n = -3 + j as i64;
            let expected = if (n - 1).rem_euclid(2) == 0 { 2.0 / 3.0 } else { -2.0 / 3.0 };
            assert!((v[0].re - expected).abs() < 1e-13);
        }
        let h0 = |_k: i64| real_vector(&[0.0]);
        assert!(oracle_forward_sum(&c, &h0, 0, 2).unwrap().iter().all(|v| v[0].norm() == 0.0));
        assert!(matches!(oracle_forward_sum(&diag(&[0.5, 3.0]), &h1, 0, 1), Err(DifferenceError::MixedSpectrum)));
    }

    fn periodic_system() -> (DifferenceSystem, DichotomyCertificate) {
        let coefficient = Coefficient::Periodic(vec![scalar(0.5), scalar(0.25)]);
        let s = DifferenceSystem::new(1, coefficient.clone(), ones(1), Some(1.0)).unwrap();
        let cert = DichotomyCertificate::from_recursion(0.9 * 2f64.ln(), 1.05, scalar(1.0), coefficient).unwrap();
        (s, cert)
    }

    #[test]
    fn shift_invariance_examples() {
        let cert = certify_constant(&scalar(0.5)).unwrap();
        let green = cert.green(-10, 10).unwrap();
        let rep = bi_shift_invariance_check(&green, &ShiftSequence::new(vec![1, 3, -7]), 10).unwrap();
        assert!(rep.autonomous && rep.max_deviation < 1e-12);

        let (s, cert) = periodic_system();
        assert!(verify_certificate(&s, &cert, 20).unwrap().passed());
        let green = cert.green(-10, 10).unwrap();
        let even = bi_shift_invariance_check(&green, &ShiftSequence::arithmetic(2, 5), 10).unwrap();
        assert!(!even.autonomous && even.max_deviation < 1e-12, "{even:?}");
        let odd = bi_shift_invariance_check(&green, &ShiftSequence::new(vec![2, 1]), 10).unwrap();
        assert!(odd.deviations[0].1 < 1e-12);
        assert!(odd.deviations[1].1 > 0.1);
    }

    #[test]
    fn periodic_system_solution_satisfies_recursion() {
        let (s, cert) = periodic_system();
        let x = solve_bounded(&s, &cert, -20, 20, 1e-10).unwrap();
        assert!(s.recursion_residual(-20, &x.values).unwrap() < 3e-10);
        // two-periodic fixed point: x0 = 0.25·x1 + 1, x1 = 0.5·x0 + 1
        let x0 = (0.25 + 1.0) / (1.0 - 0.125);
        assert!((x.at(0).unwrap()[0].re - x0).abs() < 1e-9);
    }

    #[test]
    fn invalid_certificate_is_refused() {
        let c = scalar(0.5);
        let cert = certify_constant(&c).unwrap();
        let bogus = DichotomyCertificate { alpha: cert.alpha + 1.0, ..cert };
        assert!(matches!(
            solve_bounded(&sys(c, ones(1)), &bogus, 0, 3, 1e-10),
            Err(DifferenceError::InvalidCertificate(_))
        ));
    }

    fn random_split_matrix(seed: [f64; 9]) -> Matrix {
        // V·diag(0.3, 0.6, 1.8)·V⁻¹ with V = I + perturbation
        let v = Matrix::from_real_rows(&[
            vec![1.0 + 0.3 * seed[0], 0.3 * seed[1], 0.3 * seed[2]],
            vec![0.3 * seed[3], 1.0 + 0.3 * seed[4], 0.3 * seed[5]],
            vec![0.3 * seed[6], 0.3 * seed[7], 1.0 + 0.3 * seed[8]],
        ])
        .unwrap();
        v.solve_right(&(&v * &diag(&[0.3, 0.6, 1.8]))).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn recursion_and_tolerance_probe(seed in prop::array::uniform9(-1.0f64..1.0), w in 0.1f64..3.0) {
            let c = random_split_matrix(seed);
            let h: ForcingFn = Arc::new(move |k| {
                let t = k as f64;
                real_vector(&[(w * t).cos(), (0.7 * t).sin(), 0.5])
            });
            let s = sys(c.clone(), h);
            let cert = certify_constant(&c).unwrap();
            let tol = 1e-10;
            let x = solve_bounded(&s, &cert, -30, 30, tol).unwrap();
            prop_assert!(s.recursion_residual(-30, &x.values).unwrap() <= 3.0 * tol);
            let fine = solve_bounded(&s, &cert, -30, 30, tol / 10.0).unwrap();
            let diff = x.values.iter().zip(&fine.values).map(|(a, b)| vec_norm(&(a - b))).fold(0.0, f64::max);
            prop_assert!(diff <= 1.1 * tol);
        }

        #[test]
        fn translation_covariance(shift in -15i64..15, w in 0.1f64..3.0) {
            let c = diag(&[0.5, 3.0]);
            let base = move |k: i64| real_vector(&[(w * k as f64).cos(), (w * k as f64).sin()]);
            let shifted: ForcingFn = Arc::new(move |k| base(k + shift));
            let cert = certify_constant(&c).unwrap();
            let tol = 1e-10;
            let x = solve_bounded(&sys(c.clone(), Arc::new(base)), &cert, -20 + shift, 20 + shift, tol).unwrap();
            let y = solve_bounded(&sys(c, shifted), &cert, -20, 20, tol).unwrap();
            for (a, b) in x.values.iter().zip(&y.values) {
                prop_assert!(vec_norm(&(a - b)) <= 2.0 * tol);
            }
        }

        #[test]
        fn oracle_agrees_in_pure_cases(c0 in prop_oneof![0.05f64..0.9, 1.2f64..5.0], w in 0.1f64..3.0) {
            let c = scalar(c0);
            let h = move |k: i64| real_vector(&[(w * k as f64).cos()]);
            let tol = 1e-10;
            let x = solve_bounded(&sys(c.clone(), Arc::new(h)), &certify_constant(&c).unwrap(), -10, 10, tol).unwrap();
            let o = oracle_forward_sum(&c, &h, -10, 10).unwrap();
            for (a, b) in x.values.iter().zip(&o) {
                prop_assert!(vec_norm(&(a - b)) <= 5.0 * tol);
            }
        }
    }
}
