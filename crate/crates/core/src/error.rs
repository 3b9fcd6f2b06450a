use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A law that failed on concrete data, with enough detail to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub law: String,
    pub detail: String,
    #[serde(default)]
    pub witness: Value,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.law, self.detail)
    }
}

/// Every way an engine operation can stop short of success.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Failure {
    /// Malformed or inconsistent input, including missing declared structure.
    #[error("input error: {0}")]
    Input(String),
    /// A search or construction exceeded its budget.
    #[error("resource error: {0}")]
    Resource(String),
    /// A law was checked and found false.
    #[error("violation: {0}")]
    Violation(Violation),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Violation(_) => 1,
            Failure::Input(_) => 2,
            Failure::Resource(_) => 3,
        }
    }

    pub fn violation(&self) -> Option<&Violation> {
        match self {
            Failure::Violation(v) => Some(v),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Failure>;

/// Outcome of a checker: `Ok(())` when every instance of the law holds.
pub type Check = Result<()>;

pub fn input(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

pub fn resource(msg: impl Into<String>) -> Failure {
    Failure::Resource(msg.into())
}

pub fn violation(law: &str, detail: impl Into<String>, witness: Value) -> Failure {
    Failure::Violation(Violation {
        law: law.to_string(),
        detail: detail.into(),
        witness,
    })
}
