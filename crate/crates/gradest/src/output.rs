//! Report files: JSON summaries, flat CSV tables and columnar binary dumps.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(&self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(&self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

/// A flat table for plotting.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, headers: &[&str]) -> Self {
        Table {
            name: name.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

/// Formats a number for CSV; shortest representation that round-trips.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Space-separated coordinates, so a point fits in one CSV cell.
pub fn point(x: &[f64]) -> String {
    x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" ")
}

/// Row-major little-endian `f64` data with its layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Columnar {
    pub name: String,
    pub shape: Vec<usize>,
    pub axes: Vec<String>,
    /// Extra sidecar fields (record times, seeds, ...).
    pub meta: Value,
    pub data: Vec<f64>,
}

impl Columnar {
    fn sidecar(&self) -> Value {
        json!({
            "file": format!("{}.f64", self.name),
            "dtype": "f64le",
            "order": "row_major",
            "shape": self.shape,
            "axes": self.axes,
            "meta": self.meta,
        })
    }
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn write_csv(dir: &Path, table: &Table) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{}.csv", table.name));
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let err = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    w.write_record(&table.headers).map_err(err)?;
    for row in &table.rows {
        w.write_record(row).map_err(err)?;
    }
    w.flush().map_err(|e| io_error(&path, e))?;
    Ok(path)
}

/// Writes `<name>.f64` and the JSON sidecar `<name>.json`.
pub fn write_columnar(dir: &Path, col: &Columnar) -> Result<PathBuf, CliError> {
    let expected: usize = col.shape.iter().product();
    if expected != col.data.len() {
        return Err(CliError::Io(format!(
            "columnar {}: shape {:?} does not match {} values",
            col.name,
            col.shape,
            col.data.len()
        )));
    }
    let path = dir.join(format!("{}.f64", col.name));
    let mut f = std::io::BufWriter::new(fs::File::create(&path).map_err(|e| io_error(&path, e))?);
    for v in &col.data {
        f.write_all(&v.to_le_bytes()).map_err(|e| io_error(&path, e))?;
    }
    f.flush().map_err(|e| io_error(&path, e))?;
    write_json(&dir.join(format!("{}.json", col.name)), &col.sidecar())?;
    Ok(path)
}

/// Reads a columnar dump back through its sidecar.
pub fn read_columnar(dir: &Path, name: &str) -> Result<(Value, Vec<f64>), CliError> {
    let side_path = dir.join(format!("{name}.json"));
    let side: Value = serde_json::from_str(&fs::read_to_string(&side_path).map_err(|e| io_error(&side_path, e))?)
        .map_err(|e| CliError::Io(e.to_string()))?;
    let path = dir.join(format!("{name}.f64"));
    let bytes = fs::read(&path).map_err(|e| io_error(&path, e))?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((side, data))
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
