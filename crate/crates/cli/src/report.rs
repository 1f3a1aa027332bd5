use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const TOOL: &str = "superselect";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub role: String,
    /// File path, or `builtin:<name>` for canned registries.
    pub source: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of_bytes(role: &str, source: &str, bytes: &[u8]) -> Self {
        Self { role: role.into(), source: source.into(), sha256: hex::encode(Sha256::digest(bytes)) }
    }
}

/// Everything needed to rerun a command and compare its results.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    /// Seconds since the Unix epoch. Serialized on its own line and
    /// excluded from reproducibility comparisons.
    pub timestamp: u64,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub seed: u64,
    pub status: &'static str,
    pub exit_code: i32,
    pub results: Value,
}

impl RunReport {
    pub fn new(command: Vec<String>, seed: u64) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self {
            timestamp,
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs: Vec::new(),
            seed,
            status: "ok",
            exit_code: 0,
            results: Value::Null,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Report text with the timestamp line removed.
pub fn strip_timestamp(report: &str) -> String {
    report.lines().filter(|l| !l.trim_start().starts_with("\"timestamp\"")).collect::<Vec<_>>().join("\n")
}
