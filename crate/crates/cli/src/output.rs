//! Task reports, tables and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// One tolerance comparison. `pass` is `lo ≤ value ≤ hi` with open ends for `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, hi: f64) -> Self {
        Check { name: name.into(), value, lo: None, hi: Some(hi), pass: value < hi }
    }

    pub fn above(name: impl Into<String>, value: f64, lo: f64) -> Self {
        Check { name: name.into(), value, lo: Some(lo), hi: None, pass: value > lo }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Check { name: name.into(), value, lo: Some(lo), hi: Some(hi), pass: (lo..=hi).contains(&value) }
    }
}

/// Flat numeric table; `Text` cells hold labels such as a branch name.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(io_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(format_cell)).map_err(io_err)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Shortest decimal that parses back to the same `f64`; exponent form
/// outside the range where plain digits stay short.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 || v.is_nan() || v.is_infinite() || (1e-5..1e16).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Num(v) => format_f64(*v),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

/// Everything one task produced.
#[derive(Debug, Clone)]
pub struct Report {
    pub task: String,
    pub record: Value,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// The structured record: config echo, results, checks and verdict.
    pub fn document(&self, config: &Value) -> Value {
        serde_json::json!({
            "task": self.task,
            "config": config,
            "results": self.record,
            "checks": self.checks,
            "passed": self.passed(),
            "tables": self.tables.iter().map(|t| format!("{}.csv", t.name)).collect::<Vec<_>>(),
        })
    }

    /// Writes `<task>.json` and one CSV per table into `dir`.
    pub fn write(&self, dir: &Path, config: &Value) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let mut written = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            write_atomic(&path, &t.to_csv()?)?;
            written.push(path);
        }
        let mut json = serde_json::to_vec_pretty(&self.document(config)).map_err(|e| CliError::Io(e.to_string()))?;
        json.push(b'\n');
        let path = dir.join(format!("{}.json", self.task));
        write_atomic(&path, &json)?;
        written.push(path);
        Ok(written)
    }
}

/// Temp file in the target directory, then rename over the destination.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    tmp.write_all(bytes).map_err(|e| CliError::Io(e.to_string()))?;
    tmp.as_file().sync_all().map_err(|e| CliError::Io(e.to_string()))?;
    tmp.persist(path).map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}
