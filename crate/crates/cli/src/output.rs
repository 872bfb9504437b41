//! Tables and records with a provenance header, serialised deterministically.

use std::fmt;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // 12 significant digits; −0 prints as 0
            Cell::Float(v) => write!(f, "{:.11e}", v + 0.0),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => write!(f, "{s}"),
        }
    }
}

impl Cell {
    fn to_json(&self) -> Value {
        match self {
            Cell::Float(v) if v.is_finite() => json!(format!("{v:.11e}").parse::<f64>().unwrap()),
            Cell::Float(_) => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
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
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&'static str]) -> Table {
        Table { name: name.to_string(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| *c == name)?;
        self.rows
            .iter()
            .map(|r| match r[k] {
                Cell::Float(v) => Some(v),
                Cell::Int(v) => Some(v as f64),
                Cell::Text(_) => None,
            })
            .collect()
    }
}

/// One output file, fully rendered in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file_name: String,
    pub contents: String,
}

fn header(command: &str, config: &RunConfig) -> Value {
    json!({
        "artifact": "arrayscat",
        "version": VERSION,
        "command": command,
        "config_sha256": config.hash(),
        "config": config.provenance(),
    })
}

pub fn render_table(table: &Table, command: &str, config: &RunConfig) -> Artifact {
    match config.format {
        Format::Csv => {
            let mut s = String::new();
            s.push_str(&format!("# arrayscat {VERSION}\n# command: {command}\n# config_sha256: {}\n", config.hash()));
            s.push_str(&format!("# config: {}\n", serde_json::to_string(&config.provenance()).unwrap()));
            s.push_str(&table.columns.join(","));
            s.push('\n');
            for row in &table.rows {
                let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
                s.push_str(&line.join(","));
                s.push('\n');
            }
            Artifact { file_name: format!("{}.csv", table.name), contents: s }
        }
        Format::Json => {
            let rows: Vec<Value> = table.rows.iter().map(|r| Value::Array(r.iter().map(Cell::to_json).collect())).collect();
            let doc = json!({ "meta": header(command, config), "columns": table.columns, "rows": rows });
            Artifact { file_name: format!("{}.json", table.name), contents: pretty(&doc) }
        }
    }
}

/// Structured records are always JSON.
pub fn render_record<T: Serialize>(name: &str, data: &T, command: &str, config: &RunConfig) -> Artifact {
    let doc = json!({ "meta": header(command, config), "data": data });
    Artifact { file_name: format!("{name}.json"), contents: pretty(&doc) }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap();
    s.push('\n');
    s
}

pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for a in artifacts {
        let path = dir.join(&a.file_name);
        std::fs::write(&path, &a.contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}
