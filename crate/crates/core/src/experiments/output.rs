//! Tabular output. CSV files start with a `# seed=.. config_hash=..` comment
//! line followed by the header row; JSON files carry the same metadata as
//! fields.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::config::OutputFormat;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Empty,
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn to_field(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) if v.is_finite() => v.to_string(),
            Cell::Float(_) | Cell::Empty => String::new(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(_) | Cell::Empty => Value::Null,
            Cell::Text(s) => json!(s),
        }
    }
}

/// Provenance stamped on every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Meta {
    pub seed: u64,
    pub config_hash: String,
}

impl Meta {
    pub fn comment(&self) -> String {
        format!("# seed={} config_hash={}", self.seed, self.config_hash)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, meta: &Meta, mut out: W) -> Result<()> {
        writeln!(out, "{}", meta.comment()).map_err(csv::Error::from)?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_field))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_json(&self, meta: &Meta) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::to_json).collect()))
            .collect();
        json!({
            "seed": meta.seed,
            "config_hash": meta.config_hash,
            "columns": self.columns,
            "rows": rows,
        })
    }

    /// Writes `<dir>/<stem>.<ext>` in the requested format.
    pub fn write_to(&self, dir: &Path, stem: &str, format: OutputFormat, meta: &Meta) -> Result<PathBuf> {
        let path = dir.join(format!("{stem}.{}", format.extension()));
        let mut out = create(&path)?;
        match format {
            OutputFormat::Csv => self.write_csv(meta, &mut out)?,
            OutputFormat::Json => write_json(&mut out, &self.to_json(meta))?,
        }
        finish(out, &path)?;
        Ok(path)
    }
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Output {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn finish(mut out: BufWriter<File>, path: &Path) -> Result<()> {
    out.flush().map_err(|source| Error::Output {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_json<W: Write>(out: &mut W, value: &Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    out.write_all(b"\n").map_err(serde_json::Error::io)?;
    Ok(())
}

/// Creates `dir` if needed and checks that a file can be written in it.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    let err = |source| Error::Output {
        path: dir.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(err)?;
    let probe = dir.join(".lm05-write-probe");
    File::create(&probe).map_err(err)?;
    std::fs::remove_file(&probe).map_err(err)?;
    Ok(())
}
