//! Report rendering. Tables and key-value summaries both carry JSON values
//! so the TSV and JSON forms stay in lockstep; cells are rounded before they
//! land here, never during rendering.

use std::io::{self, Write};

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportKind {
    Tsv,
    Json,
}

fn render(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn write(&self, kind: ReportKind, out: &mut dyn Write) -> io::Result<()> {
        match kind {
            ReportKind::Tsv => {
                writeln!(out, "{}", self.columns.join("\t"))?;
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(render).collect();
                    writeln!(out, "{}", cells.join("\t"))?;
                }
            }
            ReportKind::Json => {
                let objects: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let mut obj = Map::new();
                        for (col, val) in self.columns.iter().zip(row) {
                            obj.insert((*col).to_string(), val.clone());
                        }
                        Value::Object(obj)
                    })
                    .collect();
                serde_json::to_writer_pretty(&mut *out, &Value::Array(objects))?;
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

/// Single-run summary: ordered key/value lines in TSV, one object in JSON
/// (JSON keys come out sorted; the values are what matters).
pub struct Kv {
    pairs: Vec<(&'static str, Value)>,
}

impl Kv {
    pub fn new() -> Self {
        Kv { pairs: Vec::new() }
    }

    pub fn push(&mut self, key: &'static str, value: impl Into<Value>) {
        self.pairs.push((key, value.into()));
    }

    pub fn write(&self, kind: ReportKind, out: &mut dyn Write) -> io::Result<()> {
        match kind {
            ReportKind::Tsv => {
                for (k, v) in &self.pairs {
                    writeln!(out, "{}\t{}", k, render(v))?;
                }
            }
            ReportKind::Json => {
                let mut obj = Map::new();
                for (k, v) in &self.pairs {
                    obj.insert((*k).to_string(), v.clone());
                }
                serde_json::to_writer_pretty(&mut *out, &Value::Object(obj))?;
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

/// Percentage already in [0, 100+], kept to two decimals.
pub fn pct(x: f64) -> Value {
    Value::from((x * 100.0).round() / 100.0)
}

/// Three decimals; used for millisecond and ratio columns.
pub fn round3(x: f64) -> Value {
    Value::from((x * 1000.0).round() / 1000.0)
}
