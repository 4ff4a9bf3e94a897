//! Mode orchestration: builds the system, runs the solver or diagnostic and
//! assembles the report and trajectory CSV. No file I/O happens here.

use depca::depca_engine::{
    check_z_invertibility, plan, solve_with_plan, verify_trajectory, DepcaError, DepcaSystem, HybridTrajectory,
    Z_GRID_POINTS,
};
use depca::diagnostics::{almost_period_scan, lipschitz_probe, periodicity_check, DiagnosticsError, Observable};
use depca::difference_engine::{
    certify_constant, constant_forcing, verify_certificate, Coefficient, DichotomyCertificate, DifferenceError,
    DifferenceSystem, K_SAMPLE_RADIUS,
};
use depca::matrix_core::{vec_norm, CVector, Matrix};
use depca::reduction::{solve_by_reduction, ReductionError};
use depca::signals::SignalError;
use thiserror::Error;

use crate::config::{matrix_from_rows, DichotomyBlock, Mode, RunConfig, ScanTarget};
use crate::csv::trajectory_csv;
use crate::report::{cnum, ids, num, Report};

/// Period tolerance used when `checks.period_tol` is absent.
pub const DEFAULT_PERIOD_TOL: f64 = 1e-6;
/// Random pairs drawn by the Lipschitz probe in `verify`.
pub const LIPSCHITZ_SAMPLES: usize = 1000;
/// Largest `|m − l|` listed in the decay table.
pub const DECAY_TABLE_ROWS: i64 = 20;
/// Slack on the bound checks, as a multiple of the solve tolerance.
const BOUND_SLACK: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { seed: depca::diagnostics::DEFAULT_SEED }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid forcing: {0}")]
    Signal(#[from] SignalError),
    #[error("{0}")]
    Solver(String),
    #[error("diagnostics: {0}")]
    Diagnostics(#[from] DiagnosticsError),
}

impl From<DepcaError> for RunError {
    fn from(e: DepcaError) -> Self {
        RunError::Solver(explain_depca(&e))
    }
}

impl From<DifferenceError> for RunError {
    fn from(e: DifferenceError) -> Self {
        RunError::Solver(explain_difference(&e))
    }
}

impl From<ReductionError> for RunError {
    fn from(e: ReductionError) -> Self {
        RunError::Solver(match &e {
            ReductionError::Triangularize(inner) => {
                format!("A and B admit no common triangularizing basis ({inner}); supply system.userT or use solve mode")
            }
            ReductionError::Level { level, source } => format!("cascade level {level}: {}", explain_depca(source)),
            ReductionError::Depca(inner) => explain_depca(inner),
            other => other.to_string(),
        })
    }
}

fn explain_depca(e: &DepcaError) -> String {
    match e {
        DepcaError::SingularC { det } => format!(
            "companion matrix Z(n+1, n) is singular (|det| = {det:e}): the eigen condition fails at u = 1, \
             so x(n) does not determine a unique solution"
        ),
        DepcaError::ZNotInvertible(msg) => format!("Z(t, τ) is not invertible on [0, 1]: {msg}"),
        DepcaError::NoDichotomy(msg) => format!(
            "companion equation has no exponential dichotomy (an eigenvalue of Z(n+1, n) lies on the unit circle): {msg}"
        ),
        DepcaError::Difference(inner) => explain_difference(inner),
        other => other.to_string(),
    }
}

fn explain_difference(e: &DifferenceError) -> String {
    match e {
        DifferenceError::SingularCoefficient { n, det } => {
            format!("coefficient C({n}) is singular (|det| = {det:e}); the difference equation is not invertible")
        }
        DifferenceError::NoDichotomy(msg) => {
            format!("no exponential dichotomy (an eigenvalue of C lies on the unit circle): {msg}")
        }
        other => other.to_string(),
    }
}

/// Outcome of one run: the report and, for trajectory modes, the CSV text.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub mode: Mode,
    pub report: Report,
    pub csv: Option<String>,
}

impl Artifacts {
    /// 0 when every check passed, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.report.passed() {
            0
        } else {
            2
        }
    }
}

pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<Artifacts, RunError> {
    match config.mode {
        Mode::Solve => solve_mode(config, opts, false),
        Mode::Verify => solve_mode(config, opts, true),
        Mode::Reduce => reduce_mode(config),
        Mode::Dichotomy => dichotomy_mode(config),
        Mode::Scan => scan_mode(config),
    }
}

fn system(config: &RunConfig) -> Result<DepcaSystem, RunError> {
    Ok(DepcaSystem::new(config.a(), config.b(), config.forcing_signal()?)?)
}

fn header(config: &RunConfig, sys: &DepcaSystem) -> Report {
    let s = &config.solve;
    let mut report = Report::new(format!("depca {} report", config.mode));
    report.section(
        "system",
        vec![
            format!("dimension p = {}", sys.dim()),
            format!("|A| = {}, |B| = {}", num(sys.a.norm_inf()), num(sys.b.norm_inf())),
            format!("sup |f| <= {}", num(sys.f.sup_bound())),
            format!("window [{}, {}], tol = {:e}", s.n0, s.n1 + 1, s.tol),
        ],
    );
    report.key("mode", config.mode);
    report.key("p", sys.dim());
    report.key("n0", s.n0);
    report.key("n1", s.n1);
    report.key("tol", format!("{:e}", s.tol));
    report
}

/// Screens `det Z(u)`; failure is an error naming the eigen condition.
fn screen_z(sys: &DepcaSystem, report: &mut Report) -> Result<(), RunError> {
    let z = check_z_invertibility(sys, Z_GRID_POINTS)?;
    if let Some((i, u)) = z.analytic_failure() {
        return Err(RunError::Solver(format!(
            "eigen condition (λ_B u = −1 form) violated at u = {u:.12} on diagonal pair {i}; Z(t, τ) is singular"
        )));
    }
    if !z.passed() {
        return Err(RunError::Solver(format!(
            "Z(t, τ) is numerically singular: |det Z(u)| = {:e} at u = {}",
            z.min_det, z.min_det_at
        )));
    }
    report.check(ids::Z_INVERTIBLE, true, format!("min |det Z(u)| = {} at u = {}", num(z.min_det), z.min_det_at));
    report.key("min_det_z", num(z.min_det));
    Ok(())
}

fn periodicity(config: &RunConfig, traj: &HybridTrajectory, report: &mut Report) -> Result<(), RunError> {
    let Some([p0, q0]) = config.checks.as_ref().and_then(|c| c.period) else {
        return Ok(());
    };
    let tol = config.checks.as_ref().and_then(|c| c.period_tol).unwrap_or(DEFAULT_PERIOD_TOL);
    let r = periodicity_check(traj, (p0, q0), tol, traj.domain())?;
    report.check(
        ids::PERIODICITY,
        r.passed,
        format!("sup |x(t + {p0}/{q0}) - x(t)| = {} (tol {tol:e}, worst at t = {:.6})", num(r.deviation), r.worst_at),
    );
    report.key("period", format!("{p0}/{q0}"));
    report.key("period_deviation", num(r.deviation));
    Ok(())
}

fn integer_sup(traj: &HybridTrajectory) -> f64 {
    traj.samples().iter().map(vec_norm).fold(0.0, f64::max)
}

fn solve_mode(config: &RunConfig, opts: &RunOptions, verify: bool) -> Result<Artifacts, RunError> {
    let sys = system(config)?;
    let s = &config.solve;
    let mut report = header(config, &sys);
    screen_z(&sys, &mut report)?;
    let sup_f = sys.f.sup_bound();
    let plan = plan(&sys, sup_f, s.tol)?;
    let cert = &plan.certificate;
    report.section(
        "companion equation x(n+1) = C x(n) + h(n)",
        vec![
            format!("dichotomy: alpha = {}, K = {}", num(cert.alpha), num(cert.k)),
            format!("sup |h| <= {}", num(plan.sup_h)),
            format!("Green series truncated at |n - k| <= {}", plan.radius),
            format!("K(1 + e^-alpha)/(1 - e^-alpha) sup|h| = {}", num(cert.bound_factor() * plan.sup_h)),
        ],
    );
    report.key("alpha", num(cert.alpha));
    report.key("K", num(cert.k));
    report.key("sup_h", num(plan.sup_h));
    report.key("truncation_radius", plan.radius);

    let traj = match solve_with_plan(&sys, &plan, s.n0, s.n1, s.tol) {
        Ok(t) => t,
        Err(DepcaError::ContinuityBreach { n, gap, limit }) => {
            report.check(ids::CONTINUITY, false, format!("|x(n-) - x(n)| = {} > {} at n = {n}", num(gap), num(limit)));
            return Ok(Artifacts { mode: config.mode, report, csv: None });
        }
        Err(e) => return Err(e.into()),
    };
    let tr = traj.report.clone().unwrap_or_else(|| verify_trajectory(&sys, &traj, s.tol, f64::NAN));
    let sup_int = integer_sup(&traj);
    let green_bound = cert.bound_factor() * plan.sup_h;
    let slack = BOUND_SLACK * s.tol;
    report.check(
        ids::CONTINUITY,
        tr.continuity_gap <= tr.continuity_limit,
        format!("max |x(n-) - x(n)| = {} <= {}", num(tr.continuity_gap), num(tr.continuity_limit)),
    );
    report.check(
        ids::RESIDUAL,
        tr.residual <= tr.residual_limit,
        format!("max |x' - Ax - Bx([t]) - f| = {} <= {}", num(tr.residual), num(tr.residual_limit)),
    );
    report.check(
        ids::RECURSION,
        tr.recursion_residual <= BOUND_SLACK * s.tol,
        format!("max |x(n+1) - C x(n) - h(n)| = {} <= {}", num(tr.recursion_residual), num(slack)),
    );
    report.check(
        ids::GREEN_BOUND,
        sup_int <= green_bound + slack,
        format!("sup_n |x(n)| = {} <= {}", num(sup_int), num(green_bound)),
    );
    report.check(
        ids::A_PRIORI_BOUND,
        tr.sup_norm <= plan.solution_bound + slack,
        format!("sup_t |x(t)| = {} <= {}", num(tr.sup_norm), num(plan.solution_bound)),
    );
    report.key("sup_norm", num(tr.sup_norm));
    report.key("sup_integer", num(sup_int));
    report.key("green_bound", num(green_bound));
    report.key("a_priori_bound", num(plan.solution_bound));
    report.key("continuity_gap", num(tr.continuity_gap));
    report.key("continuity_limit", num(tr.continuity_limit));
    report.key("continuity_margin", num(tr.continuity_limit - tr.continuity_gap));
    report.key("residual", num(tr.residual));
    report.key("residual_limit", num(tr.residual_limit));
    report.key("recursion_residual", num(tr.recursion_residual));
    periodicity(config, &traj, &mut report)?;

    if !verify {
        let csv = trajectory_csv(&traj, s.dt);
        return Ok(Artifacts { mode: config.mode, report, csv: Some(csv) });
    }

    // |x'| ≤ |A| sup|x| + |B| sup|x| + sup|f|
    let m0 = (sys.a.norm_inf() + sys.b.norm_inf()) * tr.sup_norm + sup_f;
    let lip = lipschitz_probe(&traj, m0, LIPSCHITZ_SAMPLES, opts.seed, traj.domain())?;
    report.check(
        ids::LIPSCHITZ,
        lip.passed,
        format!("worst |x(t) - x(s)| / |t - s| = {} <= {} ({} pairs)", num(lip.worst_ratio), num(m0), lip.samples),
    );
    report.key("seed", opts.seed);
    report.key("lipschitz_ratio", num(lip.worst_ratio));

    if let Some(claim) = &config.claim {
        if let Some(bound) = claim.sup_bound {
            report.check(
                ids::CLAIM_SUP,
                tr.sup_norm <= bound,
                format!("claimed sup |x| <= {}, measured {}", num(bound), num(tr.sup_norm)),
            );
        }
        if let (Some(alpha), Some(k)) = (claim.alpha, claim.k) {
            let claimed = DichotomyCertificate::from_recursion(
                alpha,
                k,
                cert.projection.clone(),
                Coefficient::Constant(plan.companion.clone()),
            )?;
            let dsys = homogeneous(Coefficient::Constant(plan.companion.clone()), sys.dim())?;
            let r = verify_certificate(&dsys, &claimed, K_SAMPLE_RADIUS)?;
            let (m, l) = r.worst_pair;
            report.check(
                ids::CLAIM_DICHOTOMY,
                r.decay_ok,
                format!(
                    "claimed |G(m,l)| <= {} e^(-{} |m-l|): worst relative margin {} at (m, l) = ({m}, {l})",
                    num(k),
                    num(alpha),
                    num(r.worst_decay_margin)
                ),
            );
            report.key("claim_decay_margin", num(r.worst_decay_margin));
        }
    }
    Ok(Artifacts { mode: config.mode, report, csv: None })
}

fn reduce_mode(config: &RunConfig) -> Result<Artifacts, RunError> {
    let sys = system(config)?;
    let s = &config.solve;
    let mut report = header(config, &sys);
    let user_t = config.user_t();
    let sol = solve_by_reduction(&sys, user_t.as_ref(), s.n0, s.n1, s.tol)?;
    let c = &sol.cascade;
    let rows = |m: &Matrix| -> Vec<String> {
        m.to_rows().iter().map(|r| r.iter().map(|z| cnum(*z)).collect::<Vec<_>>().join(", ")).collect()
    };
    let mut tlines = vec![format!("source: {}", if user_t.is_some() { "userT" } else { "computed" })];
    tlines.extend(rows(&c.t).into_iter().map(|r| format!("[{r}]")));
    report.section("similarity T (x = T y)", tlines);
    let mut level_lines = Vec::new();
    for l in &sol.levels {
        let lv = &l.level;
        level_lines.push(format!(
            "level {}: alpha = {}, beta = {}, c = {} (|c| = {}), window [{}, {}], radius {}, sup |z| <= {}, sup |y| = {}",
            lv.index,
            cnum(lv.alpha),
            cnum(lv.beta),
            cnum(lv.companion),
            num(lv.companion.norm()),
            l.window.0,
            l.window.1,
            l.radius,
            num(l.forcing_bound),
            num(l.sup_norm)
        ));
        report.key(format!("level.{}.c_abs", lv.index), num(lv.companion.norm()));
        report.key(format!("level.{}.sup_norm", lv.index), num(l.sup_norm));
    }
    report.section("cascade (solved bottom-up)", level_lines);
    let traj = &sol.trajectory;
    let tr = traj.report.clone().unwrap_or_else(|| verify_trajectory(&sys, traj, s.tol, f64::NAN));
    report.check(
        ids::REDUCTION_LEVEL_CONTINUITY,
        tr.continuity_gap <= tr.continuity_limit,
        format!("x = T y: max |x(n-) - x(n)| = {} <= {}", num(tr.continuity_gap), num(tr.continuity_limit)),
    );
    report.check(
        ids::REDUCTION_RESIDUAL,
        tr.residual <= tr.residual_limit,
        format!("x = T y: max |x' - Ax - Bx([t]) - f| = {} <= {}", num(tr.residual), num(tr.residual_limit)),
    );
    report.key("sup_norm", num(tr.sup_norm));
    report.key("continuity_gap", num(tr.continuity_gap));
    report.key("residual", num(tr.residual));
    periodicity(config, traj, &mut report)?;
    let csv = trajectory_csv(traj, s.dt);
    Ok(Artifacts { mode: config.mode, report, csv: Some(csv) })
}

fn homogeneous(coefficient: Coefficient, p: usize) -> Result<DifferenceSystem, DifferenceError> {
    DifferenceSystem::new(p, coefficient, constant_forcing(CVector::zeros(p)), Some(0.0))
}

/// Coefficient and certificate for `dichotomy` mode.
fn dichotomy_inputs(config: &RunConfig, d: Option<&DichotomyBlock>) -> Result<(Coefficient, DichotomyCertificate, &'static str), RunError> {
    let user = d.and_then(|d| match (d.alpha, d.k, d.p.as_ref()) {
        (Some(a), Some(k), Some(p)) => Some((a, k, matrix_from_rows(p))),
        _ => None,
    });
    if let Some(list) = d.and_then(|d| d.c_periodic.as_ref()) {
        let coef = Coefficient::Periodic(list.iter().map(matrix_from_rows).collect());
        let (a, k, p) = user.expect("validated: periodic coefficients carry a certificate");
        let cert = DichotomyCertificate::from_recursion(a, k, p, coef.clone())?;
        return Ok((coef, cert, "user certificate, periodic C(n)"));
    }
    let (c, source) = match d.and_then(|d| d.c.as_ref()) {
        Some(rows) => (matrix_from_rows(rows), "dichotomy.C"),
        None => {
            let sys = system(config)?;
            (sys.companion_matrix()?, "companion Z(n+1, n) of the system")
        }
    };
    let coef = Coefficient::Constant(c.clone());
    let cert = match user {
        Some((a, k, p)) => DichotomyCertificate::from_recursion(a, k, p, coef.clone())?,
        None => certify_constant(&c)?,
    };
    Ok((coef, cert, source))
}

fn dichotomy_mode(config: &RunConfig) -> Result<Artifacts, RunError> {
    let d = config.dichotomy.as_ref();
    let p = config.system.p;
    let window = d.and_then(|d| d.window).unwrap_or(K_SAMPLE_RADIUS);
    let (coef, cert, source) = dichotomy_inputs(config, d)?;
    let dsys = homogeneous(coef, p)?;
    let r = verify_certificate(&dsys, &cert, window)?;

    let mut report = Report::new("depca dichotomy report");
    let mut dump = vec![
        format!("coefficient: {source}"),
        format!("alpha = {}", num(cert.alpha)),
        format!("K = {}", num(cert.k)),
        format!("K(1 + e^-alpha)/(1 - e^-alpha) = {}", num(cert.bound_factor())),
        "P =".to_string(),
    ];
    for row in cert.projection.to_rows() {
        dump.push(format!("  [{}]", row.iter().map(|z| cnum(*z)).collect::<Vec<_>>().join(", ")));
    }
    report.section("certificate", dump);

    let green = cert.green(-window, window)?;
    let mut table = vec![format!("{:>4}  {:>20}  {:>20}  {:>5}", "|m-l|", "max |G(m,l)|", "K e^(-alpha|m-l|)", "ok")];
    for gap in 0..=DECAY_TABLE_ROWS.min(2 * window) {
        let mut worst: f64 = 0.0;
        for m in -window..=window {
            for l in [m - gap, m + gap] {
                if (-window..=window).contains(&l) {
                    worst = worst.max(green.at(m, l)?.norm_inf());
                }
            }
        }
        let allowed = cert.k * (-cert.alpha * gap as f64).exp();
        let ok = worst <= allowed * (1.0 + 1e-9);
        table.push(format!("{gap:>4}  {:>20}  {:>20}  {:>5}", num(worst), num(allowed), if ok { "yes" } else { "no" }));
    }
    report.section(format!("decay inequality on [-{window}, {window}]"), table);

    let (m, l) = r.worst_pair;
    report.check(
        ids::DICHOTOMY_DECAY,
        r.decay_ok,
        format!("worst relative margin {} at (m, l) = ({m}, {l})", num(r.worst_decay_margin)),
    );
    report.check(
        ids::DICHOTOMY_RECURSION,
        r.recursion_ok,
        format!("max |Y(n+1) - C(n) Y(n)| (relative) = {}", num(r.recursion_residual)),
    );
    report.check(
        ids::DICHOTOMY_PROJECTION,
        r.projection_ok,
        format!("|P^2 - P| = {}, jump residual {}", num(r.idempotency_residual), num(r.jump_residual)),
    );
    report.key("mode", config.mode);
    report.key("p", p);
    report.key("window", window);
    report.key("alpha", num(cert.alpha));
    report.key("K", num(cert.k));
    report.key("bound_factor", num(cert.bound_factor()));
    report.key("worst_decay_margin", num(r.worst_decay_margin));
    Ok(Artifacts { mode: config.mode, report, csv: None })
}

fn scan_mode(config: &RunConfig) -> Result<Artifacts, RunError> {
    let scan = config.scan.as_ref().expect("validated: scan mode has a scan block");
    let mut report = Report::new("depca scan report");
    let solution;
    let forcing;
    let target: &dyn Observable = match scan.target {
        ScanTarget::Forcing => {
            forcing = config.forcing_signal()?;
            &forcing
        }
        ScanTarget::Solution => {
            let sys = system(config)?;
            let s = &config.solve;
            screen_z(&sys, &mut report)?;
            let plan = plan(&sys, sys.f.sup_bound(), s.tol)?;
            solution = solve_with_plan(&sys, &plan, s.n0, s.n1, s.tol)?;
            &solution
        }
    };
    let r = almost_period_scan(target, scan.epsilon, scan.shift_range, scan.integer_only, scan.radius, scan.grid_step)?;
    let target_name = match scan.target {
        ScanTarget::Forcing => "forcing",
        ScanTarget::Solution => "solution",
    };
    report.section(
        "scan",
        vec![
            format!("target: {target_name}"),
            format!("epsilon = {:e}", r.epsilon),
            format!(
                "shifts tested: {} ({}), range [-{}, {}]",
                r.tested_shifts.len(),
                if scan.integer_only { "integer" } else { "real grid" },
                scan.shift_range,
                scan.shift_range
            ),
            format!("window [-{}, {}], grid step {}", r.window_radius, r.window_radius, r.grid_step),
            format!("passing: {} (density {})", r.passing_shifts.len(), num(r.density)),
        ],
    );
    let mut rows = vec![format!("{:>12}  {:>20}", "shift", "sup deviation")];
    for (s, dev) in r.tested_shifts.iter().zip(&r.deviations) {
        if *dev < r.epsilon {
            rows.push(format!("{s:>12.4}  {:>20}", num(*dev)));
        }
    }
    report.section("epsilon-almost periods", rows);
    report.key("mode", config.mode);
    report.key("scan.target", target_name);
    report.key("scan.epsilon", format!("{:e}", r.epsilon));
    report.key("scan.tested", r.tested_shifts.len());
    report.key("scan.passing_count", r.passing_shifts.len());
    report.key("scan.density", num(r.density));
    report.key(
        "scan.passing",
        r.passing_shifts.iter().map(|s| format!("{s}")).collect::<Vec<_>>().join(","),
    );
    Ok(Artifacts { mode: config.mode, report, csv: None })
}
