//! Run manifests: a reproducibility record written next to each command's
//! primary output. Contains no timestamps so reruns are byte-identical.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub subcommand: String,
    pub seed: Option<u64>,
    pub seeds: Vec<u64>,
    /// Flat rendering of the effective config.
    pub config: BTreeMap<String, String>,
    pub inputs: Vec<InputHash>,
    pub outputs: Vec<String>,
    /// False when the run aborted and outputs may be partial.
    pub complete: bool,
    /// Set when a remote backend was involved; such runs are not
    /// guaranteed to be reproducible.
    pub nondeterministic: bool,
}

#[derive(Debug, Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            seed: None,
            seeds: Vec::new(),
            config: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            complete: false,
            nondeterministic: false,
        }
    }

    pub fn with_config(mut self, cfg: &pathwise_core::Config) -> Self {
        for line in cfg.to_string().lines() {
            if let Some((k, v)) = line.split_once(" = ") {
                self.config.insert(k.to_string(), v.to_string());
            }
        }
        self
    }

    pub fn add_input(&mut self, path: &Path) {
        let sha256 = hash_file(path).unwrap_or_else(|| "unreadable".to_string());
        self.inputs.push(InputHash { path: path.display().to_string(), sha256 });
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Writes `<primary_output>.manifest.json`.
    pub fn write(&self, primary_output: &Path) -> std::io::Result<()> {
        let path = manifest_path(primary_output);
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, body + "\n")
    }
}

pub fn manifest_path(primary_output: &Path) -> PathBuf {
    let mut name = primary_output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    primary_output.with_file_name(name)
}

fn hash_file(path: &Path) -> Option<String> {
    let bytes = std::fs::read(path).ok()?;
    let digest = Sha256::digest(&bytes);
    Some(digest.iter().fold(String::with_capacity(64), |mut acc, b| {
        use std::fmt::Write;
        let _ = write!(acc, "{b:02x}");
        acc
    }))
}
