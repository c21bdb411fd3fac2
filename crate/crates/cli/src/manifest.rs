//! Run manifest: the completion marker of an output directory.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub compute_s: f64,
    pub write_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the canonical TOML of the effective configuration.
    pub config_sha256: String,
    pub seed: u64,
    pub jobs: usize,
    pub files: Vec<FileEntry>,
    pub timings: Timings,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    /// Written through a temporary file so that a manifest only ever
    /// appears complete.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let tmp = dir.join(format!("{MANIFEST_NAME}.tmp"));
        let body = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        fs::write(&tmp, body).map_err(CliError::io(&tmp))?;
        let dest = dir.join(MANIFEST_NAME);
        fs::rename(&tmp, &dest).map_err(CliError::io(dest))
    }

    pub fn read(dir: &Path) -> Result<Self, String> {
        let path = dir.join(MANIFEST_NAME);
        let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Re-hashes every listed file.
    pub fn verify(&self, dir: &Path) -> Result<(), String> {
        for f in &self.files {
            let bytes = fs::read(dir.join(&f.path)).map_err(|e| format!("{}: {e}", f.path))?;
            if bytes.len() as u64 != f.bytes || sha256_hex(&bytes) != f.sha256 {
                return Err(format!("{}: checksum mismatch", f.path));
            }
        }
        Ok(())
    }
}
