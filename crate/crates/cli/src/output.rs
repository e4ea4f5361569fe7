//! CSV tables and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

/// One CSV file: comma separated, header row, LF line endings.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem; the file is written as `<name>.csv`.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Column values by header name.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).map_err(encode)?;
        for row in &self.rows {
            w.write_record(row).map_err(encode)?;
        }
        w.into_inner().map_err(|e| CliError::Encode(e.to_string()))
    }
}

fn encode(e: csv::Error) -> CliError {
    CliError::Encode(e.to_string())
}

/// Provenance record written next to the tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub name: String,
    pub seed: u64,
    pub config_sha256: String,
    pub version: String,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(name: &str, seed: u64, config_text: &str) -> Self {
        Self {
            name: name.to_string(),
            seed,
            config_sha256: hex::encode(Sha256::digest(config_text.as_bytes())),
            version: env!("CARGO_PKG_VERSION").to_string(),
            files: Vec::new(),
        }
    }
}

/// Writes every table and `run-manifest.json` into `dir`, creating it if
/// needed. Returns the paths written.
pub fn write_run(dir: &Path, tables: &[Table], mut manifest: Manifest) -> Result<Vec<PathBuf>> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::with_capacity(tables.len() + 1);
    for table in tables {
        let file = format!("{}.csv", table.name);
        let path = dir.join(&file);
        fs::write(&path, table.to_csv()?).map_err(io(&path))?;
        manifest.files.push(file);
        written.push(path);
    }
    let path = dir.join("run-manifest.json");
    let mut json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Encode(e.to_string()))?;
    json.push('\n');
    fs::write(&path, json).map_err(io(&path))?;
    written.push(path);
    Ok(written)
}
