//! Atomic file emission, CSV/JSONL encoding and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{io_error, Result};

/// Version of every emitted CSV/JSONL schema.
pub const SCHEMA_VERSION: u32 = 1;

/// Shortest round-trip scientific notation, identical across platforms.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

/// A CSV table built in memory: header row plus numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Csv {
    header: Vec<String>,
    body: String,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            body: String::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.header
    }

    /// Appends a row of preformatted cells.
    pub fn push_cells(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.header.len(), "row width");
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }

    pub fn push(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
        self.push_cells(&cells);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut s = self.header.join(",");
        s.push('\n');
        s.push_str(&self.body);
        s.into_bytes()
    }
}

/// One record per line.
pub fn jsonl<T: Serialize>(records: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_error(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

/// Output directory that keeps an inventory of everything written to it.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileEntry {
            name: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, csv: &Csv) -> Result<()> {
        self.write(name, &csv.to_bytes())
    }

    pub fn write_jsonl<T: Serialize>(&mut self, name: &str, records: &[T]) -> Result<()> {
        self.write(name, &jsonl(records)?)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Writes `manifest.json` last; an interrupted run leaves none.
    pub fn finish<C: Serialize, S: Serialize>(
        self,
        command: &str,
        config: &C,
        wall_clock_seconds: f64,
        paths: Vec<S>,
        failures: Vec<String>,
    ) -> Result<RunManifest<S>> {
        let manifest = RunManifest {
            schema_version: SCHEMA_VERSION,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            wall_clock_seconds,
            paths,
            failures,
            files: self.files,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        write_atomic(&self.dir.join("manifest.json"), &bytes)?;
        Ok(manifest)
    }
}

/// Summary of one run: resolved config, per-path outcome and file hashes.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<S> {
    pub schema_version: u32,
    pub artifact_version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub wall_clock_seconds: f64,
    pub paths: Vec<S>,
    pub failures: Vec<String>,
    pub files: Vec<FileEntry>,
}

/// Verifies every inventory entry of a manifest against the files on disk.
pub fn verify_manifest(dir: &Path) -> Result<bool> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let Some(files) = value.get("files").and_then(|f| f.as_array()) else {
        return Ok(false);
    };
    for f in files {
        let (Some(name), Some(hash)) = (
            f.get("name").and_then(|v| v.as_str()),
            f.get("sha256").and_then(|v| v.as_str()),
        ) else {
            return Ok(false);
        };
        let p = dir.join(name);
        let bytes = std::fs::read(&p).map_err(|e| io_error(&p, e))?;
        if sha256_hex(&bytes) != hash {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.0, -1.5, 1e-300, 0.1 + 0.2, std::f64::consts::PI, 6.02e23] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
