//! Numeric tables and the run manifest.
//!
//! CSV tables start with `#` comment lines, then a header row, then plain
//! numeric rows, so they load directly in gnuplot or pandas
//! (`comment="#"`). Integer columns print as integers, and missing values
//! (a failed fit, an infeasible cell) print as `nan`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Format;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
}

impl Cell {
    fn text(self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) if v.is_nan() => "nan".to_string(),
            Cell::Num(v) => format!("{v:.10e}"),
        }
    }

    fn json(self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            comments: Vec::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.text())).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii"));
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<Value>> = self.rows.iter().map(|r| r.iter().map(|c| c.json()).collect()).collect();
        let v = json!({ "comments": self.comments, "columns": self.columns, "rows": rows });
        serde_json::to_string_pretty(&v).expect("table serializes")
    }
}

/// Collects the files of one run in its output directory.
#[derive(Debug)]
pub struct OutputDir {
    pub dir: PathBuf,
    pub format: Format,
    pub written: Vec<OutputRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub rows: usize,
}

impl OutputDir {
    pub fn create(dir: &Path, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            written: Vec::new(),
        })
    }

    /// Writes `stem.csv` or `stem.json` according to the run format.
    pub fn table(&mut self, stem: &str, table: &Table) -> Result<(), CliError> {
        let (name, body) = match self.format {
            Format::Csv => (format!("{stem}.csv"), table.to_csv()),
            Format::Json => (format!("{stem}.json"), table.to_json()),
        };
        self.raw(&name, &body, table.rows.len())
    }

    pub fn raw(&mut self, name: &str, body: &str, rows: usize) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        self.written.push(OutputRecord {
            file: name.to_string(),
            rows,
        });
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub label: String,
    pub seconds: f64,
}

/// Everything needed to re-run an output: the effective configuration
/// (with seed and trajectory count filled in) and the code version.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub program: &'static str,
    pub version: &'static str,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: Value,
    pub master_seed: u64,
    pub workers: usize,
    pub outputs: Vec<OutputRecord>,
    pub timings: Vec<Timing>,
    pub total_seconds: f64,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, body + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
