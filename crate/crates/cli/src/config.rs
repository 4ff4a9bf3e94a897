//! Run configuration: TOML schema, parsing and validation.
//!
//! Top-level blocks are `mode`, `system`, `forcing`, `solve` and `output`,
//! plus the optional `checks`, `claim`, `dichotomy` and `scan` blocks read by
//! individual modes. Numbers are decimal literals; a complex entry is written
//! as a `[re, im]` pair and a real one as a plain number. Matrices are arrays
//! of row arrays.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use depca::matrix_core::{CVector, Matrix};
use depca::signals::{ForcingSignal, OuterMap, Sequence, SignalError, TrigTerm};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Highest polynomial degree an outer map may have.
pub const MAX_OUTER_DEGREE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Solve,
    Verify,
    Reduce,
    Dichotomy,
    Scan,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Verify => "verify",
            Mode::Reduce => "reduce",
            Mode::Dichotomy => "dichotomy",
            Mode::Scan => "scan",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "solve" => Ok(Mode::Solve),
            "verify" => Ok(Mode::Verify),
            "reduce" => Ok(Mode::Reduce),
            "dichotomy" => Ok(Mode::Dichotomy),
            "scan" => Ok(Mode::Scan),
            other => Err(format!("unknown mode `{other}`; expected solve, verify, reduce, dichotomy or scan")),
        }
    }
}

/// A matrix or vector entry: `1.5` or `[1.5, -2.0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    pub fn value(self) -> Complex64 {
        match self {
            Scalar::Real(x) => Complex64::new(x, 0.0),
            Scalar::Complex([re, im]) => Complex64::new(re, im),
        }
    }

    fn is_finite(self) -> bool {
        let z = self.value();
        z.re.is_finite() && z.im.is_finite()
    }
}

pub type Rows = Vec<Vec<Scalar>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub p: usize,
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "B")]
    pub b: Rows,
    /// Similarity used by the reduction instead of the computed one.
    #[serde(rename = "userT", default, skip_serializing_if = "Option::is_none")]
    pub user_t: Option<Rows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coefficient: Vec<Scalar>,
    /// Angular frequency `ω` of `e^{iωt}`.
    pub frequency: f64,
}

/// Catalog tag (`sin`, `cos`, `square`, ...), polynomial or affine map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OuterSpec {
    Tag(String),
    Polynomial { polynomial: Vec<f64> },
    Affine { scale: f64, offset: f64 },
}

/// Constructor tree mirroring the signal catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcingSpec {
    Zero,
    Constant { value: Vec<Scalar> },
    Trig { terms: Vec<TermSpec> },
    Cosine { amplitude: Vec<Scalar>, frequency: f64 },
    Sine { amplitude: Vec<Scalar>, frequency: f64 },
    Exponential { coefficient: Vec<Scalar>, frequency: f64 },
    /// `t ↦ values[[t] mod len]`.
    Step { values: Vec<Vec<Scalar>> },
    /// Scalar `(−1)^[t]`.
    Alternating,
    RationalPeriodic { p0: i64, q0: i64, samples: Vec<Vec<Scalar>> },
    AaTest { coefficient: Vec<Scalar> },
    Sum { parts: Vec<ForcingSpec> },
    Composite { outer: OuterSpec, inner: Box<ForcingSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveBlock {
    pub n0: i64,
    pub n1: i64,
    pub tol: f64,
    /// Spacing of dense CSV output.
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksBlock {
    /// Period `p0/q0` the solution is expected to have.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<[i64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_tol: Option<f64>,
}

/// Assertions checked by `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimBlock {
    /// Claimed `sup_t |x(t)|` upper bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_bound: Option<f64>,
    /// Claimed dichotomy rate of the companion equation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

/// Difference equation for `dichotomy` mode. Without `C` or `C_periodic`
/// the companion matrix of the system is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DichotomyBlock {
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Rows>,
    /// `C(n) = C_periodic[n mod len]`; needs `alpha`, `K` and `P`.
    #[serde(rename = "C_periodic", default, skip_serializing_if = "Option::is_none")]
    pub c_periodic: Option<Vec<Rows>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanTarget {
    Forcing,
    Solution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    pub target: ScanTarget,
    pub epsilon: f64,
    pub shift_range: i64,
    pub integer_only: bool,
    pub radius: f64,
    pub grid_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
}

pub const DEFAULT_CSV: &str = "trajectory.csv";
pub const DEFAULT_REPORT: &str = "report.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub system: SystemBlock,
    pub forcing: ForcingSpec,
    pub solve: SolveBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<ChecksBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<ClaimBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dichotomy: Option<DichotomyBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputBlock>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration:\n{}", format_violations(.0))]
    Validation(Vec<ValidationError>),
}

fn format_violations(v: &[ValidationError]) -> String {
    v.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

impl ConfigError {
    /// Field paths of every violation, empty for I/O and parse errors.
    pub fn paths(&self) -> Vec<&str> {
        match self {
            ConfigError::Validation(v) => v.iter().map(|e| e.path.as_str()).collect(),
            _ => Vec::new(),
        }
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        // 1-based line of the offending span
        let line = e.span().map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        ConfigError::Parse { line, message: e.message().to_string() }
    })?;
    config.validate().map_err(ConfigError::Validation)?;
    Ok(config)
}

/// Serializes a configuration back to the file schema.
pub fn emit(config: &RunConfig) -> String {
    toml::to_string(config).expect("configuration is always representable")
}

pub fn matrix_from_rows(rows: &Rows) -> Matrix {
    let values: Vec<Vec<Complex64>> = rows.iter().map(|r| r.iter().map(|s| s.value()).collect()).collect();
    Matrix::from_complex_rows(&values).expect("validated matrix")
}

pub fn vector_from(entries: &[Scalar]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|s| s.value()))
}

struct Violations(Vec<ValidationError>);

impl Violations {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(ValidationError { path: path.into(), message: message.into() });
    }

    fn square(&mut self, path: &str, rows: &Rows, p: usize) {
        let ragged = rows.iter().any(|r| r.len() != rows.len());
        if rows.len() != p || ragged {
            let found = rows.first().map_or(0, Vec::len);
            self.push(path, format!("expected a {p}x{p} matrix, found {}x{found}", rows.len()));
        } else if rows.iter().flatten().any(|s| !s.is_finite()) {
            self.push(path, "entries must be finite");
        }
    }

    fn vector(&mut self, path: &str, v: &[Scalar], p: usize) {
        if v.len() != p {
            self.push(path, format!("expected {p} components, found {}", v.len()));
        } else if v.iter().any(|s| !s.is_finite()) {
            self.push(path, "entries must be finite");
        }
    }

    fn finite(&mut self, path: &str, x: f64) {
        if !x.is_finite() {
            self.push(path, "must be finite");
        }
    }

    fn forcing(&mut self, path: &str, spec: &ForcingSpec, p: usize) {
        let at = |field: &str| format!("{path}.{field}");
        match spec {
            ForcingSpec::Zero => {}
            ForcingSpec::Constant { value } => self.vector(&at("value"), value, p),
            ForcingSpec::Trig { terms } => {
                if terms.is_empty() {
                    self.push(at("terms"), "needs at least one term");
                }
                for (i, term) in terms.iter().enumerate() {
                    self.vector(&format!("{path}.terms[{i}].coefficient"), &term.coefficient, p);
                    self.finite(&format!("{path}.terms[{i}].frequency"), term.frequency);
                }
            }
            ForcingSpec::Cosine { amplitude, frequency } | ForcingSpec::Sine { amplitude, frequency } => {
                self.vector(&at("amplitude"), amplitude, p);
                self.finite(&at("frequency"), *frequency);
            }
            ForcingSpec::Exponential { coefficient, frequency } => {
                self.vector(&at("coefficient"), coefficient, p);
                self.finite(&at("frequency"), *frequency);
            }
            ForcingSpec::Step { values } => {
                if values.is_empty() {
                    self.push(at("values"), "needs at least one value");
                }
                for (i, v) in values.iter().enumerate() {
                    self.vector(&format!("{path}.values[{i}]"), v, p);
                }
            }
            ForcingSpec::Alternating => {
                if p != 1 {
                    self.push(at("kind"), format!("alternating is scalar, system has p = {p}"));
                }
            }
            ForcingSpec::RationalPeriodic { p0, q0, samples } => {
                if *p0 <= 0 || *q0 <= 0 {
                    self.push(at("p0"), format!("period {p0}/{q0} must be positive"));
                }
                if samples.is_empty() {
                    self.push(at("samples"), "needs at least one sample");
                }
                for (i, v) in samples.iter().enumerate() {
                    self.vector(&format!("{path}.samples[{i}]"), v, p);
                }
            }
            ForcingSpec::AaTest { coefficient } => self.vector(&at("coefficient"), coefficient, p),
            ForcingSpec::Sum { parts } => {
                if parts.is_empty() {
                    self.push(at("parts"), "needs at least one part");
                }
                for (i, part) in parts.iter().enumerate() {
                    self.forcing(&format!("{path}.parts[{i}]"), part, p);
                }
            }
            ForcingSpec::Composite { outer, inner } => {
                if let Err(e) = outer_map(outer) {
                    self.push(at("outer"), e.to_string());
                }
                self.forcing(&at("inner"), inner, p);
            }
        }
    }
}

fn outer_map(spec: &OuterSpec) -> Result<OuterMap, SignalError> {
    match spec {
        OuterSpec::Tag(tag) => OuterMap::from_tag(tag),
        OuterSpec::Polynomial { polynomial } => {
            if polynomial.len() > MAX_OUTER_DEGREE + 1 {
                Err(SignalError::UnsupportedOuter(format!(
                    "polynomial of degree {} exceeds {MAX_OUTER_DEGREE}",
                    polynomial.len() - 1
                )))
            } else if polynomial.iter().any(|c| !c.is_finite()) {
                Err(SignalError::UnsupportedOuter("polynomial coefficients must be finite".into()))
            } else {
                Ok(OuterMap::Polynomial(polynomial.clone()))
            }
        }
        OuterSpec::Affine { scale, offset } => Ok(OuterMap::Affine { scale: *scale, offset: *offset }),
    }
}

impl RunConfig {
    /// Every schema violation, each tagged with its field path.
    pub fn validate(&self) -> Result<(), Vec<ValidationError>> {
        let mut v = Violations(Vec::new());
        let p = self.system.p;
        if p == 0 {
            v.push("system.p", "dimension must be at least 1");
        } else {
            v.square("system.A", &self.system.a, p);
            v.square("system.B", &self.system.b, p);
            if let Some(t) = &self.system.user_t {
                v.square("system.userT", t, p);
            }
            v.forcing("forcing", &self.forcing, p);
        }
        let s = &self.solve;
        if !(s.tol > 0.0 && s.tol < 1.0) {
            v.push("solve.tol", format!("must lie in (0, 1), got {}", s.tol));
        }
        if !(s.dt > 0.0 && s.dt <= 1.0) {
            v.push("solve.dt", format!("must lie in (0, 1], got {}", s.dt));
        }
        if s.n1 < s.n0 {
            v.push("solve.n1", format!("must be at least n0 = {}, got {}", s.n0, s.n1));
        }
        if let Some(c) = &self.checks {
            if let Some([p0, q0]) = c.period {
                if p0 <= 0 || q0 <= 0 {
                    v.push("checks.period", format!("period {p0}/{q0} must be positive"));
                }
            }
            if let Some(t) = c.period_tol {
                if !(t > 0.0) {
                    v.push("checks.period_tol", "must be positive");
                }
            }
        }
        if let Some(c) = &self.claim {
            for (name, value) in [("claim.sup_bound", c.sup_bound), ("claim.alpha", c.alpha), ("claim.K", c.k)] {
                if let Some(x) = value {
                    if !(x > 0.0 && x.is_finite()) {
                        v.push(name, format!("must be positive and finite, got {x}"));
                    }
                }
            }
            if c.alpha.is_some() != c.k.is_some() {
                v.push("claim.K", "alpha and K must be claimed together");
            }
        }
        if let Some(d) = &self.dichotomy {
            if p > 0 {
                self.validate_dichotomy(d, p, &mut v);
            }
        }
        if let Some(s) = &self.scan {
            if !(s.epsilon > 0.0) {
                v.push("scan.epsilon", "must be positive");
            }
            if s.shift_range < 1 {
                v.push("scan.shift_range", "must be at least 1");
            }
            if !(s.radius > 0.0 && s.radius.is_finite()) {
                v.push("scan.radius", "must be positive and finite");
            }
            if !(s.grid_step > 0.0 && s.grid_step.is_finite()) {
                v.push("scan.grid_step", "must be positive and finite");
            }
        }
        if self.mode == Mode::Scan && self.scan.is_none() {
            v.push("scan", "scan mode needs a [scan] block");
        }
        if v.0.is_empty() {
            Ok(())
        } else {
            Err(v.0)
        }
    }

    fn validate_dichotomy(&self, d: &DichotomyBlock, p: usize, v: &mut Violations) {
        if d.c.is_some() && d.c_periodic.is_some() {
            v.push("dichotomy.C_periodic", "give either C or C_periodic, not both");
        }
        if let Some(c) = &d.c {
            v.square("dichotomy.C", c, p);
        }
        if let Some(list) = &d.c_periodic {
            if list.is_empty() {
                v.push("dichotomy.C_periodic", "needs at least one matrix");
            }
            for (i, c) in list.iter().enumerate() {
                v.square(&format!("dichotomy.C_periodic[{i}]"), c, p);
            }
            for (name, present) in [("dichotomy.alpha", d.alpha.is_some()), ("dichotomy.K", d.k.is_some()), ("dichotomy.P", d.p.is_some())] {
                if !present {
                    v.push(name, "required with C_periodic");
                }
            }
        }
        if let Some(proj) = &d.p {
            v.square("dichotomy.P", proj, p);
        }
        for (name, value) in [("dichotomy.alpha", d.alpha), ("dichotomy.K", d.k)] {
            if let Some(x) = value {
                if !(x > 0.0 && x.is_finite()) {
                    v.push(name, format!("must be positive and finite, got {x}"));
                }
            }
        }
        let partial = [d.alpha.is_some(), d.k.is_some(), d.p.is_some()];
        if d.c_periodic.is_none() && partial.iter().any(|&b| b) && !partial.iter().all(|&b| b) {
            v.push("dichotomy.P", "a user certificate needs alpha, K and P together");
        }
        if let Some(w) = d.window {
            if w < 1 {
                v.push("dichotomy.window", "must be at least 1");
            }
        }
    }

    pub fn a(&self) -> Matrix {
        matrix_from_rows(&self.system.a)
    }

    pub fn b(&self) -> Matrix {
        matrix_from_rows(&self.system.b)
    }

    pub fn user_t(&self) -> Option<Matrix> {
        self.system.user_t.as_ref().map(matrix_from_rows)
    }

    pub fn forcing_signal(&self) -> Result<ForcingSignal, SignalError> {
        build_forcing(&self.forcing, self.system.p)
    }

    pub fn csv_name(&self) -> &str {
        self.output.as_ref().and_then(|o| o.csv.as_deref()).unwrap_or(DEFAULT_CSV)
    }

    pub fn report_name(&self) -> &str {
        self.output.as_ref().and_then(|o| o.report.as_deref()).unwrap_or(DEFAULT_REPORT)
    }

    pub fn output_dir(&self) -> Option<&str> {
        self.output.as_ref().and_then(|o| o.dir.as_deref())
    }
}

/// Builds the signal a validated forcing tree describes.
pub fn build_forcing(spec: &ForcingSpec, p: usize) -> Result<ForcingSignal, SignalError> {
    let rows = |values: &[Vec<Scalar>]| values.iter().map(|v| vector_from(v)).collect::<Vec<_>>();
    match spec {
        ForcingSpec::Zero => Ok(ForcingSignal::zero(p)),
        ForcingSpec::Constant { value } => Ok(ForcingSignal::constant(vector_from(value))),
        ForcingSpec::Trig { terms } => ForcingSignal::trig(
            p,
            terms.iter().map(|t| TrigTerm { coefficient: vector_from(&t.coefficient), frequency: t.frequency }).collect(),
        ),
        ForcingSpec::Cosine { amplitude, frequency } => Ok(ForcingSignal::cosine(vector_from(amplitude), *frequency)),
        ForcingSpec::Sine { amplitude, frequency } => Ok(ForcingSignal::sine(vector_from(amplitude), *frequency)),
        ForcingSpec::Exponential { coefficient, frequency } => {
            Ok(ForcingSignal::exponential(vector_from(coefficient), *frequency))
        }
        ForcingSpec::Step { values } => ForcingSignal::step(Sequence::Periodic(rows(values))),
        ForcingSpec::Alternating => Ok(ForcingSignal::alternating()),
        ForcingSpec::RationalPeriodic { p0, q0, samples } => ForcingSignal::rational_periodic(*p0, *q0, rows(samples)),
        ForcingSpec::AaTest { coefficient } => Ok(ForcingSignal::aa_test(vector_from(coefficient))),
        ForcingSpec::Sum { parts } => {
            ForcingSignal::sum(parts.iter().map(|s| build_forcing(s, p)).collect::<Result<_, _>>()?)
        }
        ForcingSpec::Composite { outer, inner } => {
            depca::signals::compose(outer_map(outer)?, &build_forcing(inner, p)?)
        }
    }
}
