//! Versioned JSON verification reports.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

pub const REPORT_SCHEMA: u32 = 1;

/// One verified claim. `clause` names the definition or construction step
/// the check instantiates.
#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub clause: String,
    pub passed: bool,
    pub numbers: BTreeMap<String, Value>,
    pub witnesses: Vec<Value>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, clause: impl Into<String>, passed: bool) -> Self {
        CheckRecord {
            name: name.into(),
            clause: clause.into(),
            passed,
            numbers: BTreeMap::new(),
            witnesses: Vec::new(),
        }
    }

    pub fn number(mut self, key: &str, v: impl Serialize) -> Self {
        self.numbers.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
        self
    }

    pub fn witness(mut self, w: impl Serialize) -> Self {
        self.witnesses.push(serde_json::to_value(w).unwrap_or(Value::Null));
        self
    }

    pub fn witnesses<T: Serialize>(mut self, ws: impl IntoIterator<Item = T>) -> Self {
        for w in ws {
            self = self.witness(w);
        }
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub passed: bool,
    pub checks: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl Report {
    pub fn new(command: &str, seed: u64, config: BTreeMap<String, String>) -> Self {
        Report {
            schema_version: REPORT_SCHEMA,
            command: command.to_string(),
            seed,
            config,
            checks: Vec::new(),
            summary: Summary { passed: true, checks: 0, failed: 0 },
        }
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.checks.push(check);
        self.summary.checks = self.checks.len();
        self.summary.failed = self.checks.iter().filter(|c| !c.passed).count();
        self.summary.passed = self.summary.failed == 0;
    }

    pub fn passed(&self) -> bool {
        self.summary.passed
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}
