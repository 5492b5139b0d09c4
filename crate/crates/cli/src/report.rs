//! The JSON envelope every command writes.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Pass,
    Fail,
    NoImmersion,
    /// A spec that fails validation.
    Invalid,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok | Status::Pass => 0,
            Status::Invalid => 1,
            Status::Fail => 2,
            Status::NoImmersion => 3,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub status: Status,
    pub exit_code: u8,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at_unix: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl<'a> Report<'a> {
    pub fn new(command: &'a str, config: &'a RunConfig, status: Status, result: Value, started: Instant) -> Self {
        let live = !config.deterministic();
        Report {
            tool: "pss",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            status,
            exit_code: status.exit_code(),
            result,
            generated_at_unix: live.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)),
            elapsed_seconds: live.then(|| started.elapsed().as_secs_f64()),
            threads: live.then(rayon::current_num_threads),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
