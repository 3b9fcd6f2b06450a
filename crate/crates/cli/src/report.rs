//! Run reports: one line per check, the first counterexample, and free-form
//! data, serialised with a schema version.

use serde::Serialize;
use serde_json::{Map, Value};

use excomp::io::SCHEMA_VERSION;
use excomp::{Failure, Result, Violation};

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: Vec<String>,
    pub status: &'static str,
    pub exit_code: i32,
    pub checks: Vec<CheckLine>,
    pub counterexample: Option<Violation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub data: Map<String, Value>,
}

/// Accumulates checks while a command runs.
#[derive(Default)]
pub struct Recorder {
    pub checks: Vec<CheckLine>,
    pub data: Map<String, Value>,
}

pub fn status_of(f: &Failure) -> &'static str {
    match f {
        Failure::Violation(_) => "violation",
        Failure::Input(_) => "input-error",
        Failure::Resource(_) => "resource-error",
    }
}

impl Recorder {
    /// Records the outcome of one named check and passes failures on.
    pub fn check<T>(&mut self, name: &str, r: Result<T>) -> Result<T> {
        match &r {
            Ok(_) => self.checks.push(CheckLine { name: name.to_string(), status: "pass", detail: None }),
            Err(f) => self.checks.push(CheckLine { name: name.to_string(), status: status_of(f), detail: Some(f.to_string()) }),
        }
        r
    }

    pub fn put(&mut self, key: &str, v: Value) {
        self.data.insert(key.to_string(), v);
    }

    pub fn finish(self, command: Vec<String>, outcome: Result<()>) -> RunReport {
        let (status, exit_code, counterexample, error) = match outcome {
            Ok(()) => ("pass", 0, None, None),
            Err(f) => {
                let v = f.violation().cloned();
                let err = if v.is_none() { Some(f.to_string()) } else { None };
                (status_of(&f), f.exit_code(), v, err)
            }
        };
        RunReport {
            schema_version: SCHEMA_VERSION,
            command,
            status,
            exit_code,
            checks: self.checks,
            counterexample,
            error,
            data: self.data,
        }
    }
}
