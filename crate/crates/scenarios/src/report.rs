//! Scenario reports and their files.
//!
//! `emit_report` writes into the output directory:
//! - `report.json`: the full report, deterministic for a given config;
//! - `timing.json`: wall-clock seconds of the run;
//! - `<table>.csv`: one file per numeric table, with a header row.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ScenarioConfig;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    /// `value <op> threshold` is the pass condition.
    pub op: String,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub tool_version: String,
    pub passed: bool,
    pub config: ScenarioConfig,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// Not part of `report.json`, so reruns stay byte-identical.
    #[serde(skip)]
    pub elapsed_seconds: f64,
}

impl ScenarioReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Collects checks and tables while a scenario runs.
#[derive(Default)]
pub struct Recorder {
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl Recorder {
    pub fn at_most(&mut self, name: &str, value: f64, threshold: f64) {
        self.push(name, value <= threshold, value, "<=", threshold, "");
    }

    pub fn at_least(&mut self, name: &str, value: f64, threshold: f64) {
        self.push(name, value >= threshold, value, ">=", threshold, "");
    }

    /// A boolean property; `value` is the count of violations.
    pub fn holds(&mut self, name: &str, violations: usize, note: &str) {
        self.push(name, violations == 0, violations as f64, "==", 0.0, note);
    }

    fn push(&mut self, name: &str, passed: bool, value: f64, op: &str, threshold: f64, note: &str) {
        self.checks.push(Check {
            name: name.to_string(),
            // NaN fails every comparison.
            passed,
            value,
            op: op.to_string(),
            threshold,
            note: note.to_string(),
        });
    }

    pub fn table(&mut self, table: Table) {
        self.tables.push(table);
    }
}

pub fn emit_report(report: &ScenarioReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), report.to_json() + "\n")?;
    let timing = serde_json::json!({ "elapsed_seconds": report.elapsed_seconds });
    fs::write(dir.join("timing.json"), serde_json::to_string_pretty(&timing)? + "\n")?;
    for table in &report.tables {
        let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", table.name)))?;
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row.iter().map(cell))?;
        }
        w.flush()?;
    }
    Ok(())
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}
