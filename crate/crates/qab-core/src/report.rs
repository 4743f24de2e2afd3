//! Named residual checks collected by the verification routines.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Bound-state numbers of the legs involved (filled in by the caller).
    #[serde(default)]
    pub ms: Vec<usize>,
    pub residual: f64,
    /// Pass threshold. For negative controls the residual must *exceed* it.
    pub tolerance: f64,
    pub passed: bool,
    /// A negative control: the check passes when the identity is violated.
    #[serde(default)]
    pub negative_control: bool,
    /// Both sides of the relation vanish identically on this representation.
    #[serde(default)]
    pub vacuous: bool,
    /// Not evaluated (e.g. a sample too close to a pole); counts as passed.
    #[serde(default)]
    pub skipped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record `residual < tol`. NaN residuals fail.
    pub fn check(&mut self, name: impl Into<String>, residual: f64, tol: f64) -> &mut CheckResult {
        self.checks.push(CheckResult {
            name: name.into(),
            ms: Vec::new(),
            residual,
            tolerance: tol,
            passed: residual < tol,
            negative_control: false,
            vacuous: false,
            skipped: false,
            note: None,
        });
        self.checks.last_mut().unwrap()
    }

    /// Record a negative control that passes when `residual > threshold`.
    pub fn expect_violation(&mut self, name: impl Into<String>, residual: f64, threshold: f64) -> &mut CheckResult {
        self.checks.push(CheckResult {
            name: name.into(),
            ms: Vec::new(),
            residual,
            tolerance: threshold,
            passed: residual > threshold,
            negative_control: true,
            vacuous: false,
            skipped: false,
            note: None,
        });
        self.checks.last_mut().unwrap()
    }

    /// Record a check that was deliberately not evaluated.
    pub fn skip(&mut self, name: impl Into<String>, reason: impl Into<String>) -> &mut CheckResult {
        let c = self.check(name, 0.0, 1.0);
        c.skipped = true;
        c.note = Some(reason.into());
        c
    }

    /// Record a boolean (structural) condition as residual 0 or 1.
    pub fn check_bool(&mut self, name: impl Into<String>, ok: bool) -> &mut CheckResult {
        self.check(name, if ok { 0.0 } else { 1.0 }, 0.5)
    }

    pub fn append(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    pub fn append_prefixed(&mut self, prefix: &str, other: VerificationReport) {
        self.checks.extend(other.checks.into_iter().map(|mut c| {
            c.name = format!("{prefix}{}", c.name);
            c
        }));
    }

    pub fn tag_ms(&mut self, ms: &[usize]) {
        for c in &mut self.checks {
            if c.ms.is_empty() {
                c.ms = ms.to_vec();
            }
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Largest residual among ordinary (non negative-control) checks.
    pub fn max_residual(&self) -> f64 {
        self.checks.iter().filter(|c| !c.negative_control && !c.skipped).map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.checks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checks.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_fail_and_negative_controls() {
        let mut r = VerificationReport::new();
        r.check("good", 1e-14, 1e-12);
        r.expect_violation("control", 0.7, 1e-2);
        assert!(r.all_passed());
        r.check("nan", f64::NAN, 1.0);
        assert!(!r.all_passed());
        assert_eq!(r.failures().count(), 1);
        assert_eq!(r.max_residual(), 1e-14);
    }
}
