//! Machine-readable verification reports.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
    /// The input could not be processed; see `error`.
    Invalid,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail | Verdict::Indeterminate => 1,
            Verdict::Invalid => 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub operation: String,
    /// SHA-256 over the operation, its arguments and the contents of input files.
    pub inputs_digest: String,
    pub residuals: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub data: Value,
}

impl Report {
    pub fn new(operation: &str, inputs_digest: String) -> Self {
        Report {
            schema: SCHEMA_VERSION,
            operation: operation.to_owned(),
            inputs_digest,
            residuals: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            verdict: Verdict::Pass,
            error: None,
            data: Value::Object(Default::default()),
        }
    }

    pub fn invalid(operation: &str, inputs_digest: String, message: String) -> Self {
        let mut r = Self::new(operation, inputs_digest);
        r.verdict = Verdict::Invalid;
        r.error = Some(message);
        r
    }

    /// Records a residual and its tolerance and updates the verdict.
    pub fn check(&mut self, name: &str, value: f64, tolerance: f64) -> &mut Self {
        self.residuals.insert(name.to_owned(), value);
        self.tolerances.insert(name.to_owned(), tolerance);
        // NaN compares false and therefore fails
        if !(value <= tolerance) && self.verdict != Verdict::Invalid {
            self.verdict = Verdict::Fail;
        }
        self
    }

    /// Downgrades a passing verdict to indeterminate.
    pub fn mark_indeterminate(&mut self) -> &mut Self {
        if self.verdict == Verdict::Pass {
            self.verdict = Verdict::Indeterminate;
        }
        self
    }

    pub fn set(&mut self, key: &str, value: Value) -> &mut Self {
        if let Value::Object(map) = &mut self.data {
            map.insert(key.to_owned(), value);
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}

/// Hex SHA-256 of length-prefixed parts.
pub fn digest<'a>(parts: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    hex::encode(hasher.finalize())
}
