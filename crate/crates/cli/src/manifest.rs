//! Run manifests: enough metadata next to every analysis output to re-run it
//! bit-identically against the same data snapshot.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    pub tool_version: String,
    /// Hash of the cache directory (cache-driven commands) or of the input
    /// files (file-driven commands); "none" for pure simulations.
    pub data_snapshot_id: String,
    /// Wall-clock provenance; the only field that varies across re-runs.
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(
        command: &str,
        parameters: BTreeMap<String, String>,
        seed: u64,
        data_snapshot_id: String,
    ) -> Self {
        Self {
            command: command.to_string(),
            parameters,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            data_snapshot_id,
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut body = serde_json::to_vec_pretty(self)?;
        body.push(b'\n');
        std::fs::write(path, body)?;
        Ok(())
    }
}

/// SHA-256 over a list of input files (name then bytes, in argument order).
pub fn files_digest(paths: &[&Path]) -> Result<String, CliError> {
    let mut hasher = Sha256::new();
    for path in paths {
        let bytes = std::fs::read(path)?;
        hasher.update(path.to_string_lossy().as_bytes());
        hasher.update([0u8]);
        hasher.update(&bytes);
        hasher.update([0u8]);
    }
    Ok(hex(&hasher.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
