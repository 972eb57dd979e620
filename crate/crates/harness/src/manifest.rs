//! Sidecar manifest written next to each output file.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::sweep::SweepRow;

/// `{crate version}+{git describe}`.
pub fn version_string() -> String {
    format!("{}+{}", env!("CARGO_PKG_VERSION"), env!("THRESHOLD_LAB_GIT"))
}

pub fn config_hash(config_text: &str) -> String {
    format!("{:x}", Sha256::digest(config_text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowFailure {
    pub index: usize,
    pub value: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config_hash: String,
    pub started_at: String,
    pub rows_ok: usize,
    pub rows_failed: usize,
    /// The pipeline draws no random numbers; outputs depend only on the config.
    pub rng: String,
    pub seedless_asserted: bool,
    pub timing_recorded: bool,
    pub output: String,
    pub failures: Vec<RowFailure>,
}

impl Manifest {
    pub fn new(config_text: &str, started_at: chrono::DateTime<chrono::Utc>, output: &str) -> Self {
        Self {
            version: version_string(),
            config_hash: config_hash(config_text),
            started_at: started_at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            rows_ok: 0,
            rows_failed: 0,
            rng: "none".into(),
            seedless_asserted: false,
            timing_recorded: true,
            output: output.into(),
            failures: vec![],
        }
    }

    pub fn with_rows(mut self, rows: &[SweepRow]) -> Self {
        self.rows_ok = rows.iter().filter(|r| r.outcome.is_ok()).count();
        self.failures = rows
            .iter()
            .filter_map(|r| {
                r.outcome.as_ref().err().map(|e| RowFailure {
                    index: r.job.index,
                    value: r.job.value,
                    error: e.clone(),
                })
            })
            .collect();
        self.rows_failed = self.failures.len();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
