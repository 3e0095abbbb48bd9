//! Result emission: stdout, or an atomically written file plus a JSON sidecar
//! echoing the resolved configuration.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::Value;

/// 17 significant digits, enough to round-trip any f64.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> anyhow::Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)
    }
}

pub struct Sink {
    pub out: Option<PathBuf>,
}

impl Sink {
    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".config.json");
        PathBuf::from(s)
    }

    /// Writes `body` to the output file (with sidecar) or to stdout.
    pub fn emit(&self, body: &[u8], config: &Value) -> anyhow::Result<()> {
        match &self.out {
            Some(path) => {
                write_atomic(path, body)?;
                let mut echo = serde_json::to_vec_pretty(config)?;
                echo.push(b'\n');
                write_atomic(&Self::sidecar_path(path), &echo)
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(body)?;
                out.flush()?;
                Ok(())
            }
        }
    }

    pub fn emit_table(&self, table: &Table, config: &Value) -> anyhow::Result<()> {
        self.emit(&table.to_csv()?, config)
    }

    pub fn emit_json(&self, value: &Value, config: &Value) -> anyhow::Result<()> {
        let mut body = serde_json::to_vec_pretty(value)?;
        body.push(b'\n');
        self.emit(&body, config)
    }
}

/// Temp file in the target directory, then rename over the destination.
pub fn write_atomic(path: &Path, body: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .with_context(|| format!("cannot create a file in {}", dir.display()))?;
    tmp.write_all(body)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
