//! Run results and their CSV / JSON renderings.
//!
//! CSV floats carry 17 significant digits; JSON objects have sorted keys.
//! Apart from an optional timestamp, equal runs give byte-identical output.

use std::collections::BTreeMap;
use std::io::Write;

use serde_json::{json, Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Two-column `key,value` table from a metrics map.
    pub fn from_metrics<'a>(metrics: impl IntoIterator<Item = (&'a String, &'a f64)>) -> Self {
        let mut t = Table::new(&["key", "value"]);
        for (k, v) in metrics {
            t.push(vec![Cell::Text(k.clone()), Cell::Float(*v)]);
        }
        t
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub summary: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub table: Table,
}

impl RunOutput {
    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    /// Non-finite floats become `null`.
    pub fn set_f64(&mut self, key: &str, value: f64) {
        self.summary.insert(key.to_string(), float(value));
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn float(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Usage(format!("unknown format {s:?} (csv or json)"))),
        }
    }
}

pub fn write_csv(table: &Table, out: impl Write) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Usage(e.to_string());
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::csv)).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn json_document(
    experiment: &str,
    parameters: &BTreeMap<String, Vec<String>>,
    run: &RunOutput,
    timestamp: Option<String>,
) -> Value {
    let params: Map<String, Value> = parameters
        .iter()
        .map(|(k, v)| {
            let val = if v.len() == 1 { json!(v[0]) } else { json!(v) };
            (k.clone(), val)
        })
        .collect();
    let checks: Vec<Value> = run
        .checks
        .iter()
        .map(|c| json!({"name": c.name, "passed": c.passed, "detail": c.detail}))
        .collect();
    let mut doc = json!({
        "experiment": experiment,
        "parameters": params,
        "summary": run.summary,
        "checks": checks,
        "passed": run.passed(),
    });
    if let Some(ts) = timestamp {
        doc["timestamp"] = json!(ts);
    }
    doc
}

pub fn write_json(doc: &Value, mut out: impl Write) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, doc).map_err(|e| CliError::Usage(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}
