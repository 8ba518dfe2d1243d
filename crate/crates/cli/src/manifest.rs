//! Run manifests: what was run, on which data, with which settings.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Content hash in git's object format: SHA-256 of `"blob <len>\0"`
/// followed by the bytes, as `git hash-object` computes it in SHA-256
/// repositories.
pub fn git_blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DataRef {
    pub path: String,
    pub bytes: u64,
    pub blob_sha256: String,
}

impl DataRef {
    pub fn of(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(CliError::io(path))?;
        Ok(DataRef {
            path: path.display().to_string(),
            bytes: bytes.len() as u64,
            blob_sha256: git_blob_hash(&bytes),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    pub config: serde_json::Value,
    pub data: Vec<DataRef>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: impl Serialize) -> CliResult<Self> {
        Ok(Manifest {
            tool: "bspf",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            threads: rayon::current_num_threads(),
            config: serde_json::to_value(config)?,
            data: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn with_data(mut self, path: &Path) -> CliResult<Self> {
        self.data.push(DataRef::of(path)?);
        Ok(self)
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text).map_err(CliError::io(&path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_blob_hash() {
        // `git hash-object --object-format=sha256 /dev/null`
        assert_eq!(
            git_blob_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
        assert_eq!(
            git_blob_hash(b"hello\n"),
            "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4"
        );
    }
}
