//! CSV and metadata writers. Every CSV row is flushed as soon as it is
//! written, so an interrupted campaign leaves only whole rows behind.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{OsprError, Result};

/// Reals are written with 17 significant digits, which round-trips any f64.
pub fn format_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Cell<'a> {
    Text(&'a str),
    Int(u64),
    Real(f64),
}

impl Cell<'_> {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Real(v) => format_real(*v),
        }
    }
}

pub struct CsvSink {
    path: PathBuf,
    writer: csv::Writer<File>,
    columns: usize,
}

impl CsvSink {
    /// Create `path` and write the header. Column names carry their unit in
    /// brackets, e.g. `mse_mean[I^2]`.
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| OsprError::io(path, e))?;
        let mut sink = Self {
            path: path.to_path_buf(),
            writer: csv::Writer::from_writer(file),
            columns: header.len(),
        };
        sink.write(header.iter().map(|s| s.to_string()).collect())?;
        Ok(sink)
    }

    pub fn row(&mut self, cells: &[Cell]) -> Result<()> {
        if cells.len() != self.columns {
            return Err(OsprError::InvalidArgument(format!(
                "{}: row has {} cells, header has {}",
                self.path.display(),
                cells.len(),
                self.columns
            )));
        }
        self.write(cells.iter().map(Cell::render).collect())
    }

    fn write(&mut self, record: Vec<String>) -> Result<()> {
        let err = |e: csv::Error| OsprError::io(&self.path, std::io::Error::other(e.to_string()));
        self.writer.write_record(&record).map_err(err)?;
        self.writer
            .flush()
            .map_err(|e| OsprError::io(&self.path, e))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Write `key = value` metadata preceded by the tool version and a
/// timestamp (seconds since the Unix epoch). The timestamp is the only
/// field that differs between identical runs.
pub fn write_metadata(path: &Path, entries: &[(&str, String)]) -> Result<()> {
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut text = format!("timestamp = {stamp}\nversion = {}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in entries {
        text.push_str(&format!("{k} = {v}\n"));
    }
    let mut f = File::create(path).map_err(|e| OsprError::io(path, e))?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| OsprError::io(path, e))
}
