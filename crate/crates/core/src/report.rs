//! Named residual checks shared by validators and verification pipelines.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "extended_f64")]
    pub residual: f64,
    #[serde(with = "extended_f64")]
    pub tol: f64,
    pub pass: bool,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl Check {
    /// Passes iff `residual ≤ tol`; a NaN residual fails.
    pub fn new(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tol,
            pass: residual <= tol,
            flags: Vec::new(),
        }
    }

    /// A check that could not be evaluated at all.
    pub fn failed(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            residual: f64::INFINITY,
            tol: 0.0,
            pass: false,
            flags: vec![format!("error: {}", reason.into())],
        }
    }

    pub fn flag(mut self, flag: impl Into<String>) -> Self {
        self.flags.push(flag.into());
        self
    }
}

/// Ordered collection of checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckList {
    pub checks: Vec<Check>,
}

impl CheckList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: CheckList) {
        self.checks.extend(other.checks);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn worst(&self) -> Option<&Check> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .chain(self.checks.iter())
            .max_by(|a, b| ratio(a).total_cmp(&ratio(b)))
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Folds a family of residuals into one check carrying the maximum.
    pub fn max_check(name: impl Into<String>, residuals: impl IntoIterator<Item = f64>, tol: f64) -> Check {
        let worst = residuals
            .into_iter()
            .fold(0.0f64, |acc, r| if r.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(r) });
        Check::new(name, worst, tol)
    }
}

fn ratio(c: &Check) -> f64 {
    if c.residual.is_nan() {
        f64::INFINITY
    } else if c.tol > 0.0 {
        c.residual / c.tol
    } else if c.residual > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

impl IntoIterator for CheckList {
    type Item = Check;
    type IntoIter = std::vec::IntoIter<Check>;

    fn into_iter(self) -> Self::IntoIter {
        self.checks.into_iter()
    }
}

impl FromIterator<Check> for CheckList {
    fn from_iter<I: IntoIterator<Item = Check>>(iter: I) -> Self {
        Self {
            checks: iter.into_iter().collect(),
        }
    }
}

/// JSON has no infinities or NaN; those are written as the strings
/// `"inf"`, `"-inf"` and `"nan"`.
mod extended_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("expected a number, got {other:?}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_fails() {
        assert!(!Check::new("x", f64::NAN, 1.0).pass);
        assert!(CheckList::max_check("x", [0.1, f64::NAN, 0.2], 1.0).residual.is_nan());
    }

    #[test]
    fn worst_prefers_failures() {
        let list: CheckList = [Check::new("a", 0.5, 1.0), Check::new("b", 2e-9, 1e-9), Check::new("c", 0.9, 1.0)]
            .into_iter()
            .collect();
        assert!(!list.pass());
        assert_eq!(list.worst().unwrap().name, "b");
    }

    #[test]
    fn non_finite_residuals_round_trip() {
        let c = Check::failed("x", "boom");
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"inf\""));
        let back: Check = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        let nan: Check = serde_json::from_str(r#"{"name":"y","residual":"nan","tol":1e-8,"pass":false}"#).unwrap();
        assert!(nan.residual.is_nan());
    }
}
