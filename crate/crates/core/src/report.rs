//! The common shape of every numerical check report.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

/// `worst_margin` is the smallest signed distance into the pass region, with
/// the tolerance already applied. A trial fails when its margin is negative
/// or not a number.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub trials: usize,
    pub failures: usize,
    pub worst_margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            trials: 0,
            failures: 0,
            worst_margin: f64::INFINITY,
            tolerance,
            pass: true,
            details: BTreeMap::new(),
        }
    }

    /// Builds a report from per-trial margins in the given order.
    pub fn from_margins(check: impl Into<String>, tolerance: f64, margins: impl IntoIterator<Item = f64>) -> Self {
        let mut report = Self::new(check, tolerance);
        for m in margins {
            report.record(m);
        }
        report
    }

    pub fn record(&mut self, margin: f64) {
        self.trials += 1;
        if margin.is_nan() || margin < 0.0 {
            self.failures += 1;
            self.pass = false;
        }
        if margin.is_nan() {
            self.worst_margin = f64::NAN;
        } else if !self.worst_margin.is_nan() {
            self.worst_margin = self.worst_margin.min(margin);
        }
    }

    /// Marks the report failed without counting a trial, e.g. for a failed precondition.
    pub fn fail(&mut self, reason: impl Into<String>) {
        self.pass = false;
        self.details.insert("failure".into(), Value::String(reason.into()));
    }

    pub fn with_detail(mut self, key: &str, value: impl Serialize) -> Self {
        self.details
            .insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn passed(&self) -> usize {
        self.trials - self.failures
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tallies_margins() {
        let r = CheckReport::from_margins("demo", 1e-6, [0.5, 0.1, -0.2]);
        assert_eq!((r.trials, r.failures, r.pass), (3, 1, false));
        assert_eq!(r.worst_margin, -0.2);
        assert!(CheckReport::from_margins("demo", 0.0, [0.0, 1.0]).pass);
        assert!(!CheckReport::from_margins("demo", 0.0, [f64::NAN]).pass);
        let json = serde_json::to_value(CheckReport::new("x", 1.0)).unwrap();
        for key in ["check", "trials", "failures", "worst_margin", "tolerance"] {
            assert!(json.get(key).is_some());
        }
    }
}
