//! The versioned JSON verification report.

use serde::Serialize;

pub const SCHEMA: u32 = 1;

/// How `measured` is compared with `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// |measured − target| ≤ tolerance
    Absolute,
    /// |measured − target| ≤ tolerance·|target|
    Relative,
    /// measured ≤ tolerance (target is the ideal value)
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub check_name: String,
    pub criterion: u8,
    pub comparison: Comparison,
    pub target: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        criterion: u8,
        comparison: Comparison,
        target: f64,
        measured: f64,
        tolerance: f64,
    ) -> Self {
        let pass = measured.is_finite()
            && match comparison {
                Comparison::Absolute => (measured - target).abs() <= tolerance,
                Comparison::Relative => (measured - target).abs() <= tolerance * target.abs(),
                Comparison::AtMost => measured <= tolerance,
            };
        Self {
            check_name: name.into(),
            criterion,
            comparison,
            target,
            measured,
            tolerance,
            pass,
            note: None,
        }
    }

    pub fn relative(name: impl Into<String>, criterion: u8, target: f64, measured: f64, tolerance: f64) -> Self {
        Self::new(name, criterion, Comparison::Relative, target, measured, tolerance)
    }

    pub fn absolute(name: impl Into<String>, criterion: u8, target: f64, measured: f64, tolerance: f64) -> Self {
        Self::new(name, criterion, Comparison::Absolute, target, measured, tolerance)
    }

    pub fn at_most(name: impl Into<String>, criterion: u8, measured: f64, bound: f64) -> Self {
        Self::new(name, criterion, Comparison::AtMost, 0.0, measured, bound)
    }

    /// A check whose computation failed.
    pub fn failed(name: impl Into<String>, criterion: u8, err: impl std::fmt::Display) -> Self {
        let mut c = Self::new(name, criterion, Comparison::Absolute, 0.0, f64::NAN, 0.0);
        c.note = Some(format!("computation failed: {err}"));
        c
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// measured/target, for checks that miss by a fixed factor.
    pub fn ratio(&self) -> f64 {
        self.measured / self.target
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub suite: String,
    pub quick: bool,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(suite: &str, quick: bool, checks: Vec<Check>) -> Self {
        Self {
            schema: SCHEMA,
            suite: suite.to_string(),
            quick,
            pass: checks.iter().all(|c| c.pass),
            checks,
        }
    }

    pub fn failing(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// JSON with NaN and infinities written as null.
    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        serde_json::to_string_pretty(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons() {
        assert!(Check::relative("a", 1, 2.0, 2.0 + 1e-9, 1e-8).pass);
        assert!(!Check::relative("a", 1, 2.0, 2.1, 1e-8).pass);
        assert!(Check::absolute("b", 1, 0.0, 1e-12, 1e-10).pass);
        assert!(Check::at_most("c", 1, 0.5, 1.0).pass);
        assert!(!Check::at_most("c", 1, f64::NAN, 1.0).pass);
        assert!(!Check::failed("d", 1, "boom").pass);
    }

    #[test]
    fn report_json_has_schema() {
        let r = Report::new("kernels", false, vec![Check::failed("d", 2, "boom")]);
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["pass"], false);
        assert!(v["checks"][0]["measured"].is_null());
        assert_eq!(v["checks"][0]["check_name"], "d");
    }
}
