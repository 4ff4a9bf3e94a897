//! Plain-text reports with a machine-readable `KEY = value` section.
//!
//! The section starts after the line [`KEYS_MARKER`]. Keys are stable and
//! every check is listed as `check.<id> = pass|fail`.

use std::fmt::Write as _;

pub const KEYS_MARKER: &str = "[keys]";

/// Stable identifiers of the invariants a report can cite.
pub mod ids {
    pub const Z_INVERTIBLE: &str = "depca.z_invertible";
    pub const CONTINUITY: &str = "depca.continuity";
    pub const RESIDUAL: &str = "depca.residual";
    pub const RECURSION: &str = "difference.recursion";
    pub const GREEN_BOUND: &str = "bound.green_series";
    pub const A_PRIORI_BOUND: &str = "bound.a_priori";
    pub const PERIODICITY: &str = "diagnostics.periodicity";
    pub const LIPSCHITZ: &str = "diagnostics.lipschitz";
    pub const CLAIM_SUP: &str = "claim.sup_bound";
    pub const CLAIM_DICHOTOMY: &str = "claim.dichotomy";
    pub const DICHOTOMY_DECAY: &str = "dichotomy.decay";
    pub const DICHOTOMY_RECURSION: &str = "dichotomy.recursion";
    pub const DICHOTOMY_PROJECTION: &str = "dichotomy.projection";
    pub const REDUCTION_LEVEL_CONTINUITY: &str = "reduction.continuity";
    pub const REDUCTION_RESIDUAL: &str = "reduction.residual";
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub title: String,
    /// Free-form sections, each a heading followed by lines.
    pub sections: Vec<(String, Vec<String>)>,
    pub checks: Vec<Check>,
    pub keys: Vec<(String, String)>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Self { title: title.into(), ..Self::default() }
    }

    pub fn section(&mut self, heading: impl Into<String>, lines: Vec<String>) {
        self.sections.push((heading.into(), lines));
    }

    pub fn check(&mut self, id: &'static str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { id, passed, detail: detail.into() });
    }

    pub fn key(&mut self, key: impl Into<String>, value: impl ToString) {
        self.keys.push((key.into(), value.to_string()));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_ids(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.id).collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        let _ = writeln!(out, "{}", "=".repeat(self.title.chars().count()));
        for (heading, lines) in &self.sections {
            let _ = writeln!(out, "\n{heading}");
            for line in lines {
                let _ = writeln!(out, "  {line}");
            }
        }
        if !self.checks.is_empty() {
            let _ = writeln!(out, "\nchecks");
            for c in &self.checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                let _ = writeln!(out, "  [{tag}] {:<26} {}", c.id, c.detail);
            }
        }
        let _ = writeln!(out, "\n{KEYS_MARKER}");
        let status = if self.passed() { "pass" } else { "fail" };
        let _ = writeln!(out, "status = {status}");
        let failed = self.failed_ids();
        let _ = writeln!(out, "failed = {}", if failed.is_empty() { "none".to_string() } else { failed.join(",") });
        for c in &self.checks {
            let _ = writeln!(out, "check.{} = {}", c.id, if c.passed { "pass" } else { "fail" });
        }
        for (k, v) in &self.keys {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Reads the `KEY = value` section of a rendered report.
pub fn parse_keys(text: &str) -> Vec<(String, String)> {
    text.lines()
        .skip_while(|l| l.trim() != KEYS_MARKER)
        .skip(1)
        .filter_map(|l| l.split_once(" = ").map(|(k, v)| (k.trim().to_string(), v.trim().to_string())))
        .collect()
}

/// Value of `key` in a rendered report.
pub fn lookup(text: &str, key: &str) -> Option<String> {
    parse_keys(text).into_iter().find(|(k, _)| k == key).map(|(_, v)| v)
}

/// Fixed-format float used in reports.
pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}

/// `re±im·i` with both parts in [`num`] format.
pub fn cnum(z: num_complex::Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{sign}{}i", num(z.re), num(z.im.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_section_round_trips() {
        let mut r = Report::new("demo");
        r.section("summary", vec!["hello".into()]);
        r.check(ids::CONTINUITY, true, "ok");
        r.check(ids::RESIDUAL, false, "too large");
        r.key("sup_norm", num(2.0));
        let text = r.render();
        assert_eq!(lookup(&text, "status").as_deref(), Some("fail"));
        assert_eq!(lookup(&text, "failed").as_deref(), Some("depca.residual"));
        assert_eq!(lookup(&text, "check.depca.continuity").as_deref(), Some("pass"));
        assert_eq!(lookup(&text, "sup_norm").as_deref(), Some("2.000000000000e0"));
    }

    #[test]
    fn complex_format_keeps_the_sign() {
        let z = num_complex::Complex64::new(1.0, -0.5);
        assert_eq!(cnum(z), "1.000000000000e0-5.000000000000e-1i");
    }

    #[test]
    fn empty_report_passes() {
        let text = Report::new("x").render();
        assert_eq!(lookup(&text, "status").as_deref(), Some("pass"));
        assert_eq!(lookup(&text, "failed").as_deref(), Some("none"));
    }
}
