//! Verification report: per-check records plus a summary, serialized with a
//! stable field order so identical configurations produce byte-identical
//! JSON.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
}

/// Direction in which `measured` is compared against `bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// measured ≤ bound + tolerance
    AtMost,
    /// measured ≥ bound − tolerance
    AtLeast,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: CheckStatus,
    pub measured: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub direction: Direction,
    pub detail: String,
}

impl CheckRecord {
    pub fn new(
        name: &str,
        measured: f64,
        bound: f64,
        tolerance: f64,
        direction: Direction,
        detail: String,
    ) -> Self {
        let ok = match direction {
            Direction::AtMost => measured <= bound + tolerance,
            Direction::AtLeast => measured >= bound - tolerance,
        };
        Self {
            name: name.to_string(),
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            measured,
            bound,
            tolerance,
            direction,
            detail,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub generator: String,
    pub seed: u64,
    pub config: super::verify::VerifyConfig,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl Report {
    pub fn new(seed: u64, config: super::verify::VerifyConfig, checks: Vec<CheckRecord>) -> Self {
        let passed = checks.iter().filter(|c| c.passed()).count();
        let failed = checks.len() - passed;
        Self {
            generator: super::rng::GENERATOR_NAME.to_string(),
            seed,
            config,
            summary: Summary {
                passed,
                failed,
                total: checks.len(),
            },
            checks,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization") + "\n"
    }

    /// Aligned text table, one line per check.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let name_width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(4)
            .max(4);
        out.push_str(&format!(
            "{:<name_width$}  {:<6}  {:>13}  {:>13}  {:>9}  detail\n",
            "name", "status", "measured", "bound", "tol"
        ));
        for c in &self.checks {
            let status = match c.status {
                CheckStatus::Pass => "PASS",
                CheckStatus::Fail => "FAIL",
            };
            out.push_str(&format!(
                "{:<name_width$}  {:<6}  {:>13.6e}  {:>13.6e}  {:>9.1e}  {}\n",
                c.name, status, c.measured, c.bound, c.tolerance, c.detail
            ));
        }
        out.push_str(&format!(
            "\n{} / {} checks passed (seed {})\n",
            self.summary.passed, self.summary.total, self.seed
        ));
        out
    }
}
