//! Tables (CSV or JSON) and the run summary.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

/// 17 significant digits, enough to read every `f64` back exactly.
pub fn format_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(v) => format_num(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(v.to_string()),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: &'static str,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &'static [&'static str]) -> Self {
        Self {
            name,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::text))?;
                }
                w.flush()?;
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> =
                            self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                        Value::Object(obj)
                    })
                    .collect();
                serde_json::to_writer_pretty(&mut *out, &rows)?;
                writeln!(out)?;
            }
        }
        Ok(())
    }

    pub fn file_name(&self, format: Format) -> String {
        match format {
            Format::Csv => format!("{}.csv", self.name),
            Format::Json => format!("{}.json", self.name),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub schema_version: u32,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub master_seed: u64,
    pub wall_time: f64,
    pub passed: bool,
    pub metrics: Value,
}

/// Writes the table and the summary into `dir`, or the table to stdout.
pub fn emit(cfg: &RunConfig, table: &Table, summary: &Summary) -> Result<()> {
    let format = cfg.format();
    match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            write_file(&dir.join(table.file_name(format)), |w| table.write(format, w))?;
            write_file(&dir.join("summary.json"), |w| {
                serde_json::to_writer_pretty(&mut *w, summary)?;
                writeln!(w)?;
                Ok(())
            })?;
        }
        None => {
            let stdout = std::io::stdout();
            table.write(format, &mut stdout.lock())?;
        }
    }
    Ok(())
}

fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = std::io::BufWriter::new(file);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn summary<'a>(command: &'a str, cfg: &'a RunConfig, wall_time: f64, passed: bool, metrics: Value) -> Summary<'a> {
    Summary {
        schema_version: SCHEMA_VERSION,
        command,
        config: cfg,
        master_seed: cfg.seed(),
        wall_time,
        passed,
        metrics,
    }
}
