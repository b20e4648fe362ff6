use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// A measured quantity with the oracle or closed form it is compared to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub oracle: String,
}

/// Outcome of one pass/fail comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub tolerance: f64,
    pub detail: String,
}

/// Machine-readable result of one experiment.
///
/// Everything except `wall_time_s` is a function of the config, the seed
/// and the crate version.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub inputs: serde_json::Value,
    pub tolerances: BTreeMap<String, f64>,
    pub metrics: Vec<Metric>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    pub wall_time_s: f64,
}

impl Report {
    pub fn new(experiment: &str, seed: u64, inputs: serde_json::Value, tolerances: BTreeMap<String, f64>) -> Self {
        Report {
            experiment: experiment.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            inputs,
            tolerances,
            metrics: Vec::new(),
            checks: Vec::new(),
            artifacts: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64, stderr: Option<f64>, oracle: impl Into<String>) {
        self.metrics.push(Metric { name: name.into(), value, stderr, oracle: oracle.into() });
    }

    /// Records `observed <= tolerance`.
    pub fn check_le(&mut self, name: impl Into<String>, observed: f64, tolerance: f64, detail: impl Into<String>) {
        let passed = observed <= tolerance;
        self.checks.push(Check { name: name.into(), passed, observed, tolerance, detail: detail.into() });
    }

    /// Records a boolean condition; `observed` is 1 for true.
    pub fn check_true(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed: ok,
            observed: if ok { 1.0 } else { 0.0 },
            tolerance: 1.0,
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        std::fs::write(path, self.to_json()? + "\n").with_context(|| format!("writing {}", path.display()))
    }

    /// Plain-text view of the report.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} (seed {}, {:.2}s)", self.experiment, self.seed, self.wall_time_s);
        for m in &self.metrics {
            match m.stderr {
                Some(e) => {
                    let _ = writeln!(s, "  {:<44} {:>14} +- {:.2e}  [{}]", m.name, number(m.value), e, m.oracle);
                }
                None => {
                    let _ = writeln!(s, "  {:<44} {:>14}  [{}]", m.name, number(m.value), m.oracle);
                }
            }
        }
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "  {tag} {:<35} {:.3e} (tol {:.1e}) {}", c.name, c.observed, c.tolerance, c.detail);
        }
        let _ = write!(s, "{}", if self.passed() { "all checks passed" } else { "some checks failed" });
        s
    }
}

fn number(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e6) {
        format!("{x:.4e}")
    } else {
        format!("{x:.8}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_fail_bookkeeping() {
        let mut r = Report::new("t", 1, serde_json::json!({}), BTreeMap::new());
        r.check_le("a", 0.5, 1.0, "");
        assert!(r.passed());
        r.check_true("b", false, "broken");
        assert!(!r.passed());
        assert!(r.summary().contains("FAIL b"));
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["checks"][1]["passed"], false);
    }
}
