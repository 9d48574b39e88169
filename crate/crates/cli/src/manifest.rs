//! Run manifests: what was computed, from which config, with checksums.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub id: String,
    pub kind: String,
    /// Relative to the manifest directory.
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_sha256: String,
    /// The config as run, overrides applied.
    pub config: serde_json::Value,
    pub tool_version: String,
    pub seed: u64,
    pub workers: usize,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub artifacts: Vec<ArtifactEntry>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn artifact(&self, id: &str) -> Option<&ArtifactEntry> {
        self.artifacts.iter().find(|a| a.id == id)
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Writes `contents` under `dir` and returns its manifest entry.
pub fn write_artifact(dir: &Path, id: &str, kind: &str, file: &str, contents: &[u8]) -> Result<ArtifactEntry> {
    let path = dir.join(file);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(ArtifactEntry {
        id: id.to_string(),
        kind: kind.to_string(),
        path: PathBuf::from(file),
        sha256: sha256_hex(contents),
        bytes: contents.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_known_strings() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
