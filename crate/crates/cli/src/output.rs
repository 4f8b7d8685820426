use std::io::Write;
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::CliError;

/// Round-trip-safe float formatting with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `bytes` to a temporary file next to `path`, then renames it
/// over `path`. Readers never observe a partially written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub struct Csv {
    buf: String,
    columns: usize,
    rows: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { buf: format!("{}\n", header.join(",")), columns: header.len(), rows: 0 }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.columns);
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.buf.as_bytes()
    }
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut v = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Library(wscs_rdf::Error::Internal(format!("JSON encoding failed: {e}"))))?;
    v.push(b'\n');
    Ok(v)
}
