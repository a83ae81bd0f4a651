//! Versioned verification reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use specrep::report::{Check, CheckList};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub scenario: String,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub wall_ms: u64,
}

impl VerificationReport {
    pub fn new(scenario: impl Into<String>, checks: CheckList) -> Self {
        let checks = checks.checks;
        Self {
            schema: SCHEMA,
            scenario: scenario.into(),
            pass: checks.iter().all(|c| c.pass),
            checks,
            wall_ms: 0,
        }
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// The check closest to (or furthest past) its tolerance.
    pub fn worst(&self) -> Option<&Check> {
        let list = CheckList {
            checks: self.checks.clone(),
        };
        let name = list.worst()?.name.clone();
        self.get(&name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{} {}", self.scenario, verdict);
        for c in &self.checks {
            let mark = if c.pass { "ok  " } else { "FAIL" };
            let _ = write!(out, "  {mark} {:<32} {:>12.3e} <= {:.1e}", c.name, c.residual, c.tol);
            if !c.flags.is_empty() {
                let _ = write!(out, "  [{}]", c.flags.join("; "));
            }
            out.push('\n');
        }
        if let Some(w) = self.worst() {
            let _ = writeln!(out, "  worst: {} ({:.3e})", w.name, w.residual);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_all_checks_pass() {
        let ok: CheckList = [Check::new("a", 0.0, 1.0)].into_iter().collect();
        assert!(VerificationReport::new("s", ok).pass);
        let bad: CheckList = [Check::new("a", 0.0, 1.0), Check::new("b", 2.0, 1.0)].into_iter().collect();
        let r = VerificationReport::new("s", bad);
        assert!(!r.pass);
        assert_eq!(r.worst().unwrap().name, "b");
    }

    #[test]
    fn json_round_trip() {
        let list: CheckList = [Check::new("a", 1e-12, 1e-8).flag("sampled")].into_iter().collect();
        let r = VerificationReport::new("b-7", list);
        let back: VerificationReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
