use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// Outcome of one verification check.
///
/// `status` is `Pass` exactly when `metric <= tolerance`. Monte Carlo checks
/// express their metric in units of standard errors so the same rule applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub status: Status,
    pub metric: f64,
    pub tolerance: f64,
    pub metadata: BTreeMap<String, Value>,
    pub wall_time_s: f64,
}

impl VerificationReport {
    pub fn new(check: impl Into<String>, metric: f64, tolerance: f64) -> Self {
        let status = if metric <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            check: check.into(),
            status,
            metric,
            tolerance,
            metadata: BTreeMap::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn timed(mut self, started: Instant) -> Self {
        self.wall_time_s = started.elapsed().as_secs_f64();
        self
    }

    /// Marks the report failed unless `ok`, recording `what` under `failed_conditions`.
    pub fn require(mut self, ok: bool, what: &str) -> Self {
        if !ok {
            self.status = Status::Fail;
            let entry = self
                .metadata
                .entry("failed_conditions".to_string())
                .or_insert_with(|| Value::Array(Vec::new()));
            if let Value::Array(v) = entry {
                v.push(Value::from(what));
            }
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// One human-readable line, e.g. for test logs.
    pub fn line(&self) -> String {
        format!(
            "[{}] {}: metric = {:.3e}, tolerance = {:.3e}",
            match self.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
            },
            self.check,
            self.metric,
            self.tolerance
        )
    }
}
