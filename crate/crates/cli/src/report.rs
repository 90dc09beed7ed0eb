//! Tabular reports written as CSV (17 significant digits) or JSON with a
//! `meta` block.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub command: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub mu0: f64,
    pub k: Option<usize>,
    pub alpha: f64,
    pub grid: Option<usize>,
    pub tol: f64,
    pub seed: u64,
    pub version: &'static str,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub meta: Meta,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Ordered `key: value` lines.
    pub summary: Vec<(String, Cell)>,
}

impl Report {
    pub fn new(meta: Meta, columns: &[&'static str]) -> Self {
        Self { meta, columns: columns.to_vec(), rows: Vec::new(), summary: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl Into<Cell>) {
        self.summary.push((key.into(), value.into()));
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_lines(&self) -> Vec<String> {
        self.summary.iter().map(|(k, v)| format!("{k}: {}", v.csv())).collect()
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                for (c, v) in self.columns.iter().zip(r) {
                    m.insert((*c).into(), v.json());
                }
                Value::Object(m)
            })
            .collect();
        let mut summary = Map::new();
        for (k, v) in &self.summary {
            summary.insert(k.clone(), v.json());
        }
        json!({ "meta": self.meta, "columns": self.columns, "rows": rows, "summary": summary })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> Meta {
        Meta { command: "t".into(), n: 7, mu0: 1.0, k: None, alpha: 1.0, grid: None, tol: 1e-10, seed: 42, version: "0" }
    }

    #[test]
    fn csv_has_header_and_17_digits() {
        let mut r = Report::new(meta(), &["t", "v"]);
        r.push(vec![0.5.into(), (1.0 / 3.0).into()]);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "t,v\n5.0000000000000000e-1,3.3333333333333331e-1\n");
    }

    #[test]
    fn json_mirrors_rows() {
        let mut r = Report::new(meta(), &["t"]);
        r.push(vec![0.25.into()]);
        r.note("ok", true);
        let v = r.to_json();
        assert_eq!(v["rows"][0]["t"], json!(0.25));
        assert_eq!(v["meta"]["N"], json!(7));
        assert_eq!(v["summary"]["ok"], json!(true));
    }
}
