//! Structured pass/fail reporting shared by the verification suites.

use serde::{Deserialize, Serialize};
use std::fmt;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckOutcome {
    Pass,
    Fail,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    /// Stable identifier of the check, e.g. `"coprime-kernel-sum deg=3"`.
    pub id: String,
    pub outcome: CheckOutcome,
    pub details: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub suite: String,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn new(suite: impl Into<String>) -> Self {
        VerificationReport {
            schema_version: SCHEMA_VERSION,
            suite: suite.into(),
            checks: Vec::new(),
        }
    }

    pub fn record(&mut self, id: impl Into<String>, ok: bool, details: impl Into<String>) {
        self.checks.push(CheckResult {
            id: id.into(),
            outcome: if ok {
                CheckOutcome::Pass
            } else {
                CheckOutcome::Fail
            },
            details: details.into(),
        });
    }

    pub fn record_outcome(
        &mut self,
        id: impl Into<String>,
        outcome: CheckOutcome,
        details: impl Into<String>,
    ) {
        self.checks.push(CheckResult {
            id: id.into(),
            outcome,
            details: details.into(),
        });
    }

    pub fn merge(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.outcome == CheckOutcome::Pass)
    }

    pub fn has_failure(&self) -> bool {
        self.checks.iter().any(|c| c.outcome == CheckOutcome::Fail)
    }

    pub fn has_undetermined(&self) -> bool {
        self.checks
            .iter()
            .any(|c| c.outcome == CheckOutcome::Undetermined)
    }

    /// Process exit code: 0 all pass, 1 any failure, 2 undetermined present.
    pub fn exit_code(&self) -> i32 {
        if self.has_failure() {
            1
        } else if self.has_undetermined() {
            2
        } else {
            0
        }
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite: {}", self.suite)?;
        for c in &self.checks {
            let mark = match c.outcome {
                CheckOutcome::Pass => "PASS",
                CheckOutcome::Fail => "FAIL",
                CheckOutcome::Undetermined => "UNDET",
            };
            if c.details.is_empty() {
                writeln!(f, "  [{mark}] {}", c.id)?;
            } else {
                writeln!(f, "  [{mark}] {} — {}", c.id, c.details)?;
            }
        }
        let (p, total) = (
            self.checks
                .iter()
                .filter(|c| c.outcome == CheckOutcome::Pass)
                .count(),
            self.checks.len(),
        );
        write!(f, "{p}/{total} checks passed")
    }
}
