//! Table emission: CSV with a one-line header or JSON, plus a sidecar
//! metadata file per command.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    U(u64),
    B(bool),
}

impl Cell {
    /// Floats carry 17 significant digits so values round-trip exactly.
    pub fn to_csv(&self) -> String {
        match *self {
            Self::F(v) => format!("{v:.16e}"),
            Self::I(v) => v.to_string(),
            Self::U(v) => v.to_string(),
            Self::B(v) => v.to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match *self {
            Self::F(v) => serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number),
            Self::I(v) => json!(v),
            Self::U(v) => json!(v),
            Self::B(v) => json!(v),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::F(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Self::U(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Self::I(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::B(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path, format: Format) -> Result<PathBuf, CliError> {
        let path = dir.join(format!("{}.{}", self.name, format.extension()));
        let io = |e: &dyn std::fmt::Display| CliError::Io(format!("writing {}: {e}", path.display()));
        match format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new()
                    .terminator(csv::Terminator::Any(b'\n'))
                    .from_path(&path)
                    .map_err(|e| io(&e))?;
                w.write_record(&self.header).map_err(|e| io(&e))?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::to_csv)).map_err(|e| io(&e))?;
                }
                w.flush().map_err(|e| io(&e))?;
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(Cell::to_json).collect()))
                    .collect();
                let doc = json!({ "columns": self.header, "rows": rows });
                let mut text = serde_json::to_string_pretty(&doc).map_err(|e| io(&e))?;
                text.push('\n');
                fs::write(&path, text).map_err(|e| io(&e))?;
            }
        }
        Ok(path)
    }
}

/// Writes every table and a `<stem>.meta.json` sidecar with the config echo,
/// tool version and wall time.
pub fn emit(
    dir: &Path,
    stem: &str,
    format: Format,
    config: Value,
    tables: &[Table],
    wall: Duration,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
    let mut written = Vec::with_capacity(tables.len() + 1);
    for t in tables {
        written.push(t.write(dir, format)?);
    }
    let files: Vec<String> = written
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let meta = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": stem,
        "format": format,
        "config": config,
        "files": files,
        "wall_time_seconds": wall.as_secs_f64(),
    });
    let path = dir.join(format!("{stem}.meta.json"));
    let mut text = serde_json::to_string_pretty(&meta).expect("metadata serialises");
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
    written.push(path);
    Ok(written)
}
