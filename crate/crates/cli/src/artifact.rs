use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Writes `bytes` to a temporary sibling of `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let io = |e: std::io::Error| CliError::runtime(format!("writing {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::data(format!("reading {}: {e}", path.display())))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

impl FileHash {
    pub fn of(path: &Path) -> Result<FileHash, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::data(format!("hashing {}: {e}", path.display())))?;
        Ok(FileHash { path: path.display().to_string(), sha256: sha256_hex(&bytes) })
    }
}

/// Record of one command invocation: what went in, what came out.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub seeds: serde_json::Value,
    pub jobs: usize,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

pub fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub struct ManifestBuilder {
    command: &'static str,
    started: u128,
    config: serde_json::Value,
    seeds: serde_json::Value,
    inputs: Vec<PathBuf>,
    details: serde_json::Value,
}

impl ManifestBuilder {
    pub fn new(command: &'static str) -> Self {
        ManifestBuilder {
            command,
            started: now_ms(),
            config: serde_json::Value::Null,
            seeds: serde_json::Value::Null,
            inputs: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn config(mut self, cfg: &impl Serialize) -> Self {
        self.config = serde_json::to_value(cfg).unwrap_or_default();
        self
    }

    pub fn seeds(mut self, seeds: serde_json::Value) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn details(mut self, details: &impl Serialize) -> Self {
        self.details = serde_json::to_value(details).unwrap_or_default();
        self
    }

    /// Hashes inputs and outputs and writes the manifest next to the first
    /// output.
    pub fn finish(self, outputs: &[&Path]) -> Result<PathBuf, CliError> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            args: std::env::args().skip(1).collect(),
            config: self.config,
            seeds: self.seeds,
            jobs: rayon::current_num_threads(),
            inputs: self.inputs.iter().map(|p| FileHash::of(p)).collect::<Result<_, _>>()?,
            outputs: outputs.iter().map(|p| FileHash::of(p)).collect::<Result<_, _>>()?,
            started_unix_ms: self.started,
            finished_unix_ms: now_ms(),
            details: self.details,
        };
        let path = manifest_path(outputs[0]);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}
