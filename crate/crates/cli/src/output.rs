//! CSV tables, digests and the run manifest.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::exec::Table;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileRecord {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunEntry {
    pub description: String,
    pub config: RunConfig,
    pub kappa_tau_sq: f64,
    pub output: FileRecord,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub runs: Vec<RunEntry>,
    /// Closed-form curves written alongside the runs.
    pub derived: Vec<DerivedEntry>,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivedEntry {
    pub description: String,
    pub value: f64,
    pub output: FileRecord,
}

impl RunManifest {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.into(),
            runs: Vec::new(),
            derived: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

pub fn render_csv(table: &Table) -> String {
    let mut out = String::from("t_seconds");
    for n in &table.names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (i, t) in table.times.iter().enumerate() {
        out.push_str(&format!("{t:.16e}"));
        for c in &table.columns {
            out.push_str(&format!(",{:.16e}", c[i]));
        }
        out.push('\n');
    }
    out
}

/// Files written by one command; removed again if the command fails.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes via a `.partial` sibling that is renamed on success.
    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<String> {
        let path = self.dir.join(name);
        let partial = self.dir.join(format!("{name}.partial"));
        let result = (|| -> std::io::Result<()> {
            let mut w = BufWriter::new(fs::File::create(&partial)?);
            w.write_all(bytes)?;
            w.into_inner()?.sync_all()?;
            fs::rename(&partial, &path)
        })();
        if let Err(e) = result {
            let _ = fs::remove_file(&partial);
            return Err(e).with_context(|| format!("writing {}", path.display()));
        }
        self.written.push(path);
        Ok(sha256_hex(bytes))
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<FileRecord> {
        let text = render_csv(table);
        let sha256 = self.write_bytes(name, text.as_bytes())?;
        Ok(FileRecord {
            file: name.to_string(),
            rows: table.rows(),
            sha256,
        })
    }

    pub fn write_manifest(&mut self, name: &str, manifest: &RunManifest) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(manifest)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())?;
        Ok(self.dir.join(name))
    }

    /// Removes everything this set wrote.
    pub fn discard(self) {
        for p in self.written {
            let _ = fs::remove_file(p);
        }
    }
}
