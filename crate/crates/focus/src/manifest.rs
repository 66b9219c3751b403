//! `manifest.json`: checksums of every file a run directory holds.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub command: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub tool_version: String,
    /// Path relative to the run directory -> checksum.
    pub files: BTreeMap<String, Entry>,
    /// Resolved configuration of the last run of each command.
    pub commands: BTreeMap<String, serde_json::Value>,
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    let hex = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok((hex, total))
}

/// Adds `files` (inside `run_dir`) to the run directory's manifest.
pub fn record(run_dir: &Path, command: &str, config: serde_json::Value, files: &[&Path]) -> Result<()> {
    let path = run_dir.join(MANIFEST_FILE);
    let mut manifest: Manifest = if path.exists() { crate::read_json(&path)? } else { Manifest::default() };
    manifest.format_version = crate::report::FORMAT_VERSION;
    manifest.tool_version = env!("CARGO_PKG_VERSION").to_string();
    for file in files {
        let (sha256, bytes) = sha256_file(file)?;
        let key = file.strip_prefix(run_dir).unwrap_or(file).to_string_lossy().replace('\\', "/");
        manifest.files.insert(key, Entry { command: command.to_string(), sha256, bytes });
    }
    manifest.commands.insert(command.to_string(), config);
    crate::write_json(&path, &manifest)
}
