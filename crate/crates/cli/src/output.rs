//! Tables, their CSV/JSON encodings and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Config(format!("output.format: unknown '{other}'"))),
        }
    }

    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

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

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Twelve significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.11e}")
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => fmt_num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // round-trip through the CSV text so both encodings carry the same digits
            Cell::Num(v) => fmt_num(*v)
                .parse::<f64>()
                .ok()
                .and_then(|x| serde_json::Number::from_f64(x).map(Value::Number))
                .unwrap_or(Value::Null),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem, without extension.
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&'static str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn encode(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = self.columns.join(",");
                s.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                    .collect();
                let v = json!({ "columns": self.columns, "rows": rows });
                let mut s = serde_json::to_string_pretty(&v).expect("table serializes");
                s.push('\n');
                s
            }
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Everything a scenario produces.
#[derive(Debug, Default)]
pub struct ScenarioOutput {
    pub tables: Vec<Table>,
    pub metadata: Map<String, Value>,
    /// Descriptions of quantities that missed their convergence target.
    pub unconverged: Vec<String>,
}

/// Writes the tables and `manifest.json`, returning the files written.
pub fn write_outputs(
    dir: &Path,
    format: Format,
    scenario: &str,
    config: &crate::config::Config,
    output: &ScenarioOutput,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let mut files = Vec::new();
    for table in &output.tables {
        let name = format!("{}.{}", table.name, format.extension());
        let path = dir.join(&name);
        let body = table.encode(format);
        fs::write(&path, &body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        files.push(json!({
            "file": name,
            "sha256": sha256_hex(body.as_bytes()),
            "rows": table.rows.len(),
        }));
        written.push(path);
    }
    let input = match &config.source {
        Some((path, bytes)) => json!({ "path": path, "sha256": sha256_hex(bytes) }),
        None => Value::Null,
    };
    let manifest = json!({
        "scenario": scenario,
        "format": format.extension(),
        "input": input,
        "config": config.entries(),
        "outputs": files,
        "converged": output.unconverged.is_empty(),
        "unconverged": output.unconverged,
        "metadata": output.metadata,
    });
    let path = dir.join("manifest.json");
    let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    body.push('\n');
    fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    written.push(path);
    Ok(written)
}
