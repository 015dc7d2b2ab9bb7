//! Run manifests: every artifact-producing command drops a
//! `<output>.manifest.json` beside its primary output recording the resolved
//! configuration, seeds, tool version, and input digests.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use twinchan::types::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Subcommand plus arguments, as invoked.
    pub command: Vec<String>,
    /// Fully resolved configuration (flags > config > defaults).
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub tool_version: String,
    /// SHA-256 of every input file, keyed by path.
    pub input_digests: BTreeMap<String, String>,
    /// Unix timestamp, seconds.
    pub created_unix: u64,
}

impl RunManifest {
    pub fn new(command: Vec<String>, config: serde_json::Value) -> Self {
        Self {
            command,
            config,
            seeds: BTreeMap::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_digests: BTreeMap::new(),
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn with_seed(mut self, name: &str, seed: u64) -> Self {
        self.seeds.insert(name.to_string(), seed);
        self
    }

    pub fn digest_input<P: AsRef<Path>>(mut self, path: P) -> Result<Self> {
        let bytes = std::fs::read(path.as_ref())?;
        let digest = Sha256::digest(&bytes);
        self.input_digests.insert(
            path.as_ref().display().to_string(),
            format!("{digest:x}"),
        );
        Ok(self)
    }

    /// Writes `<output>.manifest.json`.
    pub fn write_for<P: AsRef<Path>>(&self, output: P) -> Result<()> {
        let mut os = output.as_ref().as_os_str().to_os_string();
        os.push(".manifest.json");
        std::fs::write(os, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }
}
