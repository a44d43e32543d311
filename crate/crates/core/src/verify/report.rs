use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const REPORT_SCHEMA: &str = "evseq-report/1";

/// One pass/fail decision against a stated bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: String,
    /// Human-readable bound, e.g. `|mean - 1| <= 3*SE`.
    pub bound: String,
    pub pass: bool,
}

/// Run-dependent information kept apart from the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub runtime_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: String,
    pub check: String,
    pub config: Value,
    /// Empty for checks that are not indexed by sample size.
    pub checkpoints: Vec<u64>,
    pub mean: Vec<f64>,
    pub standard_error: Vec<f64>,
    pub verdicts: Vec<Verdict>,
    /// True iff every verdict passes (vacuously true for diagnostics).
    pub pass: bool,
    pub details: Value,
    pub metadata: Metadata,
}

impl VerificationReport {
    pub fn new(check: &str, config: Value) -> Self {
        VerificationReport {
            schema: REPORT_SCHEMA.to_string(),
            check: check.to_string(),
            config,
            checkpoints: Vec::new(),
            mean: Vec::new(),
            standard_error: Vec::new(),
            verdicts: Vec::new(),
            pass: true,
            details: Value::Null,
            metadata: Metadata { version: env!("CARGO_PKG_VERSION").to_string(), runtime_seconds: 0.0, threads: 1 },
        }
    }

    pub fn verdict(&mut self, label: impl Into<String>, bound: impl Into<String>, pass: bool) {
        self.verdicts.push(Verdict { label: label.into(), bound: bound.into(), pass });
        self.pass &= pass;
    }

    pub(crate) fn finish(mut self, started: Instant) -> Self {
        self.metadata.runtime_seconds = started.elapsed().as_secs_f64();
        self.metadata.threads = rayon::current_num_threads();
        self
    }

    /// Everything except the metadata; identical configurations give
    /// identical values.
    pub fn results(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serialises");
        if let Value::Object(map) = &mut v {
            map.remove("metadata");
        }
        v
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}
