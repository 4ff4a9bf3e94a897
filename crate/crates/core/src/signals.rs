//! Forcing signals: a small constructor catalog with exact integer shifts.
//!
//! Every [`ForcingSignal`] carries its dimension and a precomputed upper bound
//! on `sup_t |f(t)|` (max-abs norm). Shifting by an integer is exact for every
//! kind: trigonometric terms are phase-rotated, sequences are re-indexed and
//! the remaining kinds store an integer offset.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::matrix_core::{vec_norm, CVector, Matrix};

pub type SequenceFn = Arc<dyn Fn(i64) -> CVector + Send + Sync>;
pub type EvaluatorFn = Arc<dyn Fn(f64) -> CVector + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("unsupported outer map: {0}")]
    UnsupportedOuter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid signal: {0}")]
    Invalid(String),
}

/// One term `c·e^{iωt}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigTerm {
    pub coefficient: CVector,
    pub frequency: f64,
}

/// Integer-indexed generator lifted to `t ↦ g([t])`.
#[derive(Clone)]
pub enum Sequence {
    /// `g(n) = values[n mod len]`.
    Periodic(Vec<CVector>),
    Rule { rule: SequenceFn, bound: f64 },
}

impl Sequence {
    fn at(&self, n: i64) -> CVector {
        match self {
            Sequence::Periodic(values) => values[n.rem_euclid(values.len() as i64) as usize].clone(),
            Sequence::Rule { rule, .. } => rule(n),
        }
    }
}

impl fmt::Debug for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sequence::Periodic(v) => f.debug_tuple("Periodic").field(v).finish(),
            Sequence::Rule { bound, .. } => f.debug_struct("Rule").field("bound", bound).finish_non_exhaustive(),
        }
    }
}

/// Scalar maps a signal may be composed with, applied componentwise.
#[derive(Debug, Clone, PartialEq)]
pub enum OuterMap {
    Identity,
    Sin,
    Cos,
    /// `Σ a_k z^k`, degree at most 4.
    Polynomial(Vec<f64>),
    Affine { scale: f64, offset: f64 },
}

impl OuterMap {
    fn apply(&self, z: Complex64) -> Complex64 {
        match self {
            OuterMap::Identity => z,
            OuterMap::Sin => z.sin(),
            OuterMap::Cos => z.cos(),
            OuterMap::Polynomial(a) => a.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c),
            OuterMap::Affine { scale, offset } => z * scale + offset,
        }
    }

    fn bound(&self, inner: f64) -> f64 {
        match self {
            OuterMap::Identity => inner,
            // |sin z|, |cos z| ≤ cosh |z|
            OuterMap::Sin | OuterMap::Cos => inner.cosh(),
            OuterMap::Polynomial(a) => a.iter().enumerate().map(|(k, c)| c.abs() * inner.powi(k as i32)).sum(),
            OuterMap::Affine { scale, offset } => scale.abs() * inner + offset.abs(),
        }
    }

    /// Parses a catalog tag such as `sin`, `square`, `identity`.
    pub fn from_tag(tag: &str) -> Result<Self, SignalError> {
        match tag {
            "identity" => Ok(OuterMap::Identity),
            "sin" => Ok(OuterMap::Sin),
            "cos" => Ok(OuterMap::Cos),
            "square" => Ok(OuterMap::Polynomial(vec![0.0, 0.0, 1.0])),
            "cube" => Ok(OuterMap::Polynomial(vec![0.0, 0.0, 0.0, 1.0])),
            other => Err(SignalError::UnsupportedOuter(other.to_string())),
        }
    }
}

#[derive(Clone)]
pub enum SignalKind {
    Trig(Vec<TrigTerm>),
    Step { sequence: Sequence, offset: i64 },
    /// Period `p0/q0`; `samples` cover one period uniformly and are
    /// interpolated linearly (periodically wrapped).
    RationalPeriodic { p0: i64, q0: i64, samples: Vec<CVector>, offset: i64 },
    /// `c·sin(1/(2 + cos t + cos √2 t))`.
    AaTest { coefficient: CVector, offset: i64 },
    Sum(Vec<ForcingSignal>),
    Composite { outer: OuterMap, inner: Box<ForcingSignal> },
    /// `M·f(t)`.
    Linear { map: Matrix, inner: Box<ForcingSignal> },
    /// `e^{iωt}·f(t)`.
    Modulated { frequency: f64, inner: Box<ForcingSignal> },
    /// Opaque evaluator, e.g. an already solved trajectory.
    Evaluator { func: EvaluatorFn, offset: i64, label: String },
}

impl fmt::Debug for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalKind::Trig(t) => f.debug_tuple("Trig").field(t).finish(),
            SignalKind::Step { sequence, offset } => {
                f.debug_struct("Step").field("sequence", sequence).field("offset", offset).finish()
            }
            SignalKind::RationalPeriodic { p0, q0, offset, .. } => f
                .debug_struct("RationalPeriodic")
                .field("p0", p0)
                .field("q0", q0)
                .field("offset", offset)
                .finish_non_exhaustive(),
            SignalKind::AaTest { coefficient, offset } => {
                f.debug_struct("AaTest").field("coefficient", coefficient).field("offset", offset).finish()
            }
            SignalKind::Sum(s) => f.debug_tuple("Sum").field(s).finish(),
            SignalKind::Composite { outer, inner } => {
                f.debug_struct("Composite").field("outer", outer).field("inner", inner).finish()
            }
            SignalKind::Linear { map, inner } => f.debug_struct("Linear").field("map", map).field("inner", inner).finish(),
            SignalKind::Modulated { frequency, inner } => {
                f.debug_struct("Modulated").field("frequency", frequency).field("inner", inner).finish()
            }
            SignalKind::Evaluator { label, offset, .. } => {
                f.debug_struct("Evaluator").field("label", label).field("offset", offset).finish_non_exhaustive()
            }
        }
    }
}

/// A forcing term `f: ℝ → ℂᵖ`.
#[derive(Clone, Debug)]
pub struct ForcingSignal {
    kind: SignalKind,
    dim: usize,
    sup_bound: f64,
}

fn cplx(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl ForcingSignal {
    pub fn kind(&self) -> &SignalKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Upper bound on `sup_t |f(t)|`.
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn zero(dim: usize) -> Self {
        Self::trig(dim, Vec::new()).expect("empty trig polynomial is valid")
    }

    pub fn constant(value: CVector) -> Self {
        let dim = value.len();
        Self::trig(dim, vec![TrigTerm { coefficient: value, frequency: 0.0 }]).expect("dimension matches")
    }

    pub fn trig(dim: usize, terms: Vec<TrigTerm>) -> Result<Self, SignalError> {
        if let Some(t) = terms.iter().find(|t| t.coefficient.len() != dim) {
            return Err(SignalError::DimensionMismatch(format!(
                "trig term has {} components, expected {dim}",
                t.coefficient.len()
            )));
        }
        if terms.iter().any(|t| !t.frequency.is_finite()) {
            return Err(SignalError::Invalid("non-finite frequency".into()));
        }
        let sup_bound = terms.iter().map(|t| vec_norm(&t.coefficient)).sum();
        Ok(Self { kind: SignalKind::Trig(terms), dim, sup_bound })
    }

    /// `a·cos(ωt)` as a two-term exponential sum.
    pub fn cosine(amplitude: CVector, frequency: f64) -> Self {
        let dim = amplitude.len();
        let half = &amplitude * cplx(0.5);
        Self::trig(
            dim,
            vec![
                TrigTerm { coefficient: half.clone(), frequency },
                TrigTerm { coefficient: half, frequency: -frequency },
            ],
        )
        .expect("dimension matches")
    }

    /// `a·sin(ωt)`.
    pub fn sine(amplitude: CVector, frequency: f64) -> Self {
        let dim = amplitude.len();
        let c = &amplitude * Complex64::new(0.0, -0.5);
        Self::trig(
            dim,
            vec![
                TrigTerm { coefficient: c.clone(), frequency },
                TrigTerm { coefficient: -c, frequency: -frequency },
            ],
        )
        .expect("dimension matches")
    }

    /// `c·e^{iωt}`.
    pub fn exponential(coefficient: CVector, frequency: f64) -> Self {
        let dim = coefficient.len();
        Self::trig(dim, vec![TrigTerm { coefficient, frequency }]).expect("dimension matches")
    }

    pub fn step(sequence: Sequence) -> Result<Self, SignalError> {
        let (dim, sup_bound) = match &sequence {
            Sequence::Periodic(values) => {
                let first = values.first().ok_or_else(|| SignalError::Invalid("empty periodic sequence".into()))?;
                if values.iter().any(|v| v.len() != first.len()) {
                    return Err(SignalError::DimensionMismatch("sequence values differ in length".into()));
                }
                (first.len(), values.iter().map(vec_norm).fold(0.0, f64::max))
            }
            Sequence::Rule { rule, bound } => (rule(0).len(), *bound),
        };
        Ok(Self { kind: SignalKind::Step { sequence, offset: 0 }, dim, sup_bound })
    }

    /// Scalar step signal `t ↦ (−1)^{[t]}`.
    pub fn alternating() -> Self {
        Self::step(Sequence::Periodic(vec![
            CVector::from_element(1, cplx(1.0)),
            CVector::from_element(1, cplx(-1.0)),
        ]))
        .expect("nonempty")
    }

    pub fn rational_periodic(p0: i64, q0: i64, samples: Vec<CVector>) -> Result<Self, SignalError> {
        if p0 <= 0 || q0 <= 0 {
            return Err(SignalError::Invalid(format!("period {p0}/{q0} must be positive")));
        }
        let first = samples.first().ok_or_else(|| SignalError::Invalid("no samples for one period".into()))?;
        let dim = first.len();
        if samples.iter().any(|v| v.len() != dim) {
            return Err(SignalError::DimensionMismatch("period samples differ in length".into()));
        }
        let sup_bound = samples.iter().map(vec_norm).fold(0.0, f64::max);
        Ok(Self { kind: SignalKind::RationalPeriodic { p0, q0, samples, offset: 0 }, dim, sup_bound })
    }

    pub fn aa_test(coefficient: CVector) -> Self {
        let dim = coefficient.len();
        let sup_bound = vec_norm(&coefficient);
        Self { kind: SignalKind::AaTest { coefficient, offset: 0 }, dim, sup_bound }
    }

    pub fn sum(parts: Vec<ForcingSignal>) -> Result<Self, SignalError> {
        let dim = parts.first().map(|p| p.dim).ok_or_else(|| SignalError::Invalid("empty sum".into()))?;
        if parts.iter().any(|p| p.dim != dim) {
            return Err(SignalError::DimensionMismatch("sum terms differ in dimension".into()));
        }
        let sup_bound = parts.iter().map(|p| p.sup_bound).sum();
        Ok(Self { kind: SignalKind::Sum(parts), dim, sup_bound })
    }

    /// `M·f(t)`; trigonometric polynomials are mapped term by term so they
    /// keep their closed-form structure.
    pub fn linear(map: Matrix, inner: ForcingSignal) -> Result<Self, SignalError> {
        if map.cols() != inner.dim {
            return Err(SignalError::DimensionMismatch(format!(
                "map has {} columns, signal has {} components",
                map.cols(),
                inner.dim
            )));
        }
        if let SignalKind::Trig(terms) = &inner.kind {
            let mapped = terms
                .iter()
                .map(|t| TrigTerm { coefficient: map.mul_vec(&t.coefficient), frequency: t.frequency })
                .collect();
            return Self::trig(map.rows(), mapped);
        }
        let sup_bound = map.norm_inf() * inner.sup_bound;
        Ok(Self { dim: map.rows(), sup_bound, kind: SignalKind::Linear { map, inner: Box::new(inner) } })
    }

    /// `e^{iωt}·f(t)`.
    pub fn modulated(frequency: f64, inner: ForcingSignal) -> Self {
        if let SignalKind::Trig(terms) = &inner.kind {
            let shifted =
                terms.iter().map(|t| TrigTerm { coefficient: t.coefficient.clone(), frequency: t.frequency + frequency }).collect();
            return Self::trig(inner.dim, shifted).expect("same dimension");
        }
        Self { dim: inner.dim, sup_bound: inner.sup_bound, kind: SignalKind::Modulated { frequency, inner: Box::new(inner) } }
    }

    /// Wraps an arbitrary evaluator. `sup_bound` must bound its values.
    pub fn evaluator(dim: usize, sup_bound: f64, label: impl Into<String>, func: EvaluatorFn) -> Self {
        Self { kind: SignalKind::Evaluator { func, offset: 0, label: label.into() }, dim, sup_bound }
    }

    /// `f(t)`; step-lifted sequences use `⌊t⌋`.
    pub fn evaluate(&self, t: f64) -> CVector {
        match &self.kind {
            SignalKind::Trig(terms) => {
                let mut acc = CVector::zeros(self.dim);
                for term in terms {
                    acc += &term.coefficient * Complex64::new(0.0, term.frequency * t).exp();
                }
                acc
            }
            SignalKind::Step { sequence, offset } => sequence.at(t.floor() as i64 + offset),
            SignalKind::RationalPeriodic { p0, q0, samples, offset } => {
                let periods = (t + *offset as f64) * (*q0 as f64) / (*p0 as f64);
                let phase = periods - periods.floor();
                let m = samples.len();
                let pos = phase * m as f64;
                let j = (pos.floor() as usize).min(m - 1);
                let w = pos - j as f64;
                &samples[j] * cplx(1.0 - w) + &samples[(j + 1) % m] * cplx(w)
            }
            SignalKind::AaTest { coefficient, offset } => {
                let s = t + *offset as f64;
                let v = (1.0 / (2.0 + s.cos() + (2.0f64.sqrt() * s).cos())).sin();
                coefficient * cplx(v)
            }
            SignalKind::Sum(parts) => {
                let mut acc = CVector::zeros(self.dim);
                for p in parts {
                    acc += p.evaluate(t);
                }
                acc
            }
            SignalKind::Composite { outer, inner } => inner.evaluate(t).map(|z| outer.apply(z)),
            SignalKind::Linear { map, inner } => map.mul_vec(&inner.evaluate(t)),
            SignalKind::Modulated { frequency, inner } => inner.evaluate(t) * Complex64::new(0.0, frequency * t).exp(),
            SignalKind::Evaluator { func, offset, .. } => func(t + *offset as f64),
        }
    }

    /// The signal `t ↦ f(t + s)`.
    pub fn shift(&self, s: i64) -> ForcingSignal {
        let kind = match &self.kind {
            SignalKind::Trig(terms) => SignalKind::Trig(
                terms
                    .iter()
                    .map(|t| TrigTerm {
                        coefficient: &t.coefficient * Complex64::new(0.0, t.frequency * s as f64).exp(),
                        frequency: t.frequency,
                    })
                    .collect(),
            ),
            SignalKind::Step { sequence, offset } => SignalKind::Step { sequence: sequence.clone(), offset: offset + s },
            SignalKind::RationalPeriodic { p0, q0, samples, offset } => SignalKind::RationalPeriodic {
                p0: *p0,
                q0: *q0,
                samples: samples.clone(),
                // p0 = q0·ω is a whole number of periods
                offset: (offset + s).rem_euclid(*p0),
            },
            SignalKind::AaTest { coefficient, offset } => {
                SignalKind::AaTest { coefficient: coefficient.clone(), offset: offset + s }
            }
            SignalKind::Sum(parts) => SignalKind::Sum(parts.iter().map(|p| p.shift(s)).collect()),
            SignalKind::Composite { outer, inner } => {
                SignalKind::Composite { outer: outer.clone(), inner: Box::new(inner.shift(s)) }
            }
            SignalKind::Linear { map, inner } => SignalKind::Linear { map: map.clone(), inner: Box::new(inner.shift(s)) },
            SignalKind::Modulated { frequency, inner } => {
                // e^{iω(t+s)} f(t+s) = e^{iωt}·(e^{iωs} f(t+s))
                let rotated = ForcingSignal::linear(
                    Matrix::identity(self.dim).scale(Complex64::new(0.0, frequency * s as f64).exp()),
                    inner.shift(s),
                )
                .expect("square map");
                SignalKind::Modulated { frequency: *frequency, inner: Box::new(rotated) }
            }
            SignalKind::Evaluator { func, offset, label } => {
                SignalKind::Evaluator { func: func.clone(), offset: offset + s, label: label.clone() }
            }
        };
        ForcingSignal { kind, dim: self.dim, sup_bound: self.sup_bound }
    }

    /// `[f(n0), …, f(n1)]`.
    pub fn sample_on_integers(&self, n0: i64, n1: i64) -> Vec<CVector> {
        (n0..=n1).map(|n| self.evaluate(n as f64)).collect()
    }

    /// Trigonometric terms and the non-trigonometric remainder, used by
    /// integrators that have closed forms for exponentials.
    pub fn split_trig(&self) -> (Vec<TrigTerm>, Vec<ForcingSignal>) {
        match &self.kind {
            SignalKind::Trig(terms) => (terms.clone(), Vec::new()),
            SignalKind::Sum(parts) => {
                let mut terms = Vec::new();
                let mut rest = Vec::new();
                for p in parts {
                    let (t, r) = p.split_trig();
                    terms.extend(t);
                    rest.extend(r);
                }
                (terms, rest)
            }
            _ => (Vec::new(), vec![self.clone()]),
        }
    }

    /// True when the signal is constant on every `[n, n+1)`.
    pub fn is_step(&self) -> bool {
        match &self.kind {
            SignalKind::Step { .. } => true,
            SignalKind::Trig(terms) => terms.iter().all(|t| t.frequency == 0.0),
            SignalKind::Sum(parts) => parts.iter().all(|p| p.is_step()),
            SignalKind::Linear { inner, .. } | SignalKind::Composite { inner, .. } => inner.is_step(),
            _ => false,
        }
    }
}

/// `outer ∘ f`, componentwise.
pub fn compose(outer: OuterMap, f: &ForcingSignal) -> Result<ForcingSignal, SignalError> {
    if let OuterMap::Polynomial(a) = &outer {
        if a.len() > 5 {
            return Err(SignalError::UnsupportedOuter(format!("polynomial of degree {} (max 4)", a.len() - 1)));
        }
        if a.iter().any(|c| !c.is_finite()) {
            return Err(SignalError::UnsupportedOuter("non-finite polynomial coefficient".into()));
        }
    }
    if let OuterMap::Identity = outer {
        return Ok(f.clone());
    }
    let sup_bound = outer.bound(f.sup_bound);
    Ok(ForcingSignal { dim: f.dim, sup_bound, kind: SignalKind::Composite { outer, inner: Box::new(f.clone()) } })
}

/// Finite list of integer shifts `s_n` for window diagnostics.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ShiftSequence {
    pub entries: Vec<i64>,
}

impl ShiftSequence {
    pub fn new(entries: Vec<i64>) -> Self {
        Self { entries }
    }

    /// `s_n = n·step` for `n = 1..=count`.
    pub fn arithmetic(step: i64, count: usize) -> Self {
        Self { entries: (1..=count as i64).map(|n| n * step).collect() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Outcome of the primitive-boundedness screen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundedness {
    BoundedOnWindow,
    UnboundedSuspected,
}

#[derive(Debug, Clone)]
pub struct PrimitiveReport {
    pub verdict: Boundedness,
    /// `max |F(t)|` over `[−window, window]`.
    pub sup_estimate: f64,
    /// `max|F|` on `[−r, r]` for the dyadic radii `window, window/2, …`.
    pub dyadic_sups: Vec<(f64, f64)>,
    /// Successive ratios of `dyadic_sups`, largest radius first.
    pub growth_ratios: Vec<f64>,
}

/// Growth ratio of `max|F|` between dyadic windows above which the
/// primitive is flagged as unbounded.
pub const GROWTH_RATIO_THRESHOLD: f64 = 1.8;

/// Cumulative primitive `F(t) = ∫₀ᵗ f` on `[0, end]` (either sign of `end`)
/// by composite Simpson over cells of width ≤ `step`, split at integers.
pub(crate) fn cumulative_primitive(f: &ForcingSignal, end: f64, step: f64) -> Vec<(f64, CVector)> {
    let sign = if end >= 0.0 { 1.0 } else { -1.0 };
    let len = end.abs();
    let mut out = vec![(0.0, CVector::zeros(f.dim))];
    let mut acc = CVector::zeros(f.dim);
    let per_unit = (1.0 / step).ceil().max(1.0) as usize;
    let whole_units = len.floor() as i64;
    // every unit interval [m, m+1] is cut into `per_unit` equal cells
    for m in 0..=whole_units {
        let lo = m as f64;
        let hi = ((m + 1) as f64).min(len);
        if hi <= lo {
            break;
        }
        let cells = ((hi - lo) * per_unit as f64).ceil().max(1.0) as usize;
        for j in 0..cells {
            let a = lo + (hi - lo) * j as f64 / cells as f64;
            let b = if j + 1 == cells { hi } else { lo + (hi - lo) * (j + 1) as f64 / cells as f64 };
            acc += simpson_cell(f, sign * a, sign * b);
            out.push((sign * b, acc.clone()));
        }
    }
    out
}

/// Simpson's rule on one cell; endpoints that sit on an integer are sampled
/// from inside the cell, where step signals take their cell value.
fn simpson_cell(f: &ForcingSignal, a: f64, b: f64) -> CVector {
    let inward = |t: f64, toward: f64| {
        if t == t.round() {
            t + (toward - t).signum() * 1e-12 * (1.0 + t.abs())
        } else {
            t
        }
    };
    let fa = f.evaluate(inward(a, b));
    let fb = f.evaluate(inward(b, a));
    let fm = f.evaluate(0.5 * (a + b));
    (fa + fm * cplx(4.0) + fb) * cplx((b - a) / 6.0)
}

/// Screens `F(t) = ∫₀ᵗ f(s) ds` for boundedness on `[−window, window]`.
///
/// The verdict is window-relative: `max|F|` is compared across dyadic
/// sub-windows and growth by a factor ≥ [`GROWTH_RATIO_THRESHOLD`] per doubling
/// (median of the three outermost doublings) flags the primitive.
pub fn integral_primitive_bounded(f: &ForcingSignal, window: f64, grid_step: f64) -> PrimitiveReport {
    assert!(window > 0.0 && grid_step > 0.0, "window and grid step must be positive");
    let mut samples = cumulative_primitive(f, window, grid_step);
    samples.extend(cumulative_primitive(f, -window, grid_step).into_iter().skip(1));
    let sup_within = |r: f64| {
        samples.iter().filter(|(t, _)| t.abs() <= r + 1e-12).map(|(_, v)| vec_norm(v)).fold(0.0, f64::max)
    };
    let mut dyadic_sups = Vec::new();
    let mut r = window;
    while dyadic_sups.len() < 6 && r >= 4.0 * grid_step {
        dyadic_sups.push((r, sup_within(r)));
        r *= 0.5;
    }
    let sup_estimate = sup_within(window);
    let growth_ratios: Vec<f64> = dyadic_sups
        .windows(2)
        .map(|w| if w[1].1 > 0.0 { w[0].1 / w[1].1 } else if w[0].1 > 0.0 { f64::INFINITY } else { 1.0 })
        .collect();
    let mut outer: Vec<f64> = growth_ratios.iter().take(3).copied().collect();
    outer.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let growth = if outer.is_empty() { 1.0 } else { outer[outer.len() / 2] };
    let verdict = if sup_estimate > 1e-12 && growth >= GROWTH_RATIO_THRESHOLD {
        Boundedness::UnboundedSuspected
    } else {
        Boundedness::BoundedOnWindow
    };
    PrimitiveReport { verdict, sup_estimate, dyadic_sups, growth_ratios }
}

/// `2π`-multiple helper for frequencies written as cycles per unit time.
pub fn cycles(freq: f64) -> f64 {
    2.0 * PI * freq
}
