//! Tabular output: CSV with a header row, or JSON mirroring it under a metadata block.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, SolverConfig};
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.to_string(),
            Cell::Num(x) => format!("{x}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(x) => json!(Cell::Num(*x).csv()),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            Cell::Text(_) => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// Run metadata written in the JSON header.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub version: &'static str,
    pub name: String,
    pub tolerances: SolverConfig,
    pub wall_time_ms: u128,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of a numeric column.
    pub fn values(&self, name: &str) -> Vec<f64> {
        let k = self.column(name).expect("known column");
        self.rows.iter().map(|r| r[k].as_f64().unwrap_or(f64::NAN)).collect()
    }

    /// True if any row's `status` column is not a success status.
    pub fn has_trouble(&self) -> bool {
        let Some(k) = self.column("status") else {
            return false;
        };
        self.rows
            .iter()
            .any(|r| !matches!(&r[k], Cell::Text(s) if s == "optimal" || s == "certified_infinite"))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> CliResult<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.columns)?;
        for r in &self.rows {
            wr.write_record(r.iter().map(Cell::csv))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self, meta: &Metadata) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: serde_json::Map<String, Value> =
                    self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect();
                Value::Object(obj)
            })
            .collect();
        json!({ "metadata": meta, "columns": self.columns, "rows": rows })
    }

    pub fn render(&self, format: Format, meta: &Metadata) -> CliResult<String> {
        match format {
            Format::Csv => {
                let mut buf = Vec::new();
                self.write_csv(&mut buf)?;
                Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
            }
            Format::Json => Ok(serde_json::to_string_pretty(&self.to_json(meta))? + "\n"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_agree() {
        let mut t = Table::new(&["x", "y", "status"]);
        t.rows.push(vec![Cell::Num(0.5), Cell::Num(f64::INFINITY), "optimal".into()]);
        let meta = Metadata {
            version: "0",
            name: "t".into(),
            tolerances: SolverConfig::default(),
            wall_time_ms: 0,
        };
        assert_eq!(t.render(Format::Csv, &meta).unwrap(), "x,y,status\n0.5,inf,optimal\n");
        let j = t.to_json(&meta);
        assert_eq!(j["rows"][0]["y"], "inf");
        assert!(!t.has_trouble());
        t.rows.push(vec![Cell::Num(0.1), Cell::Num(f64::NAN), "numerical_trouble".into()]);
        assert!(t.has_trouble());
    }
}
