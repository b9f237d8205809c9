use std::collections::BTreeMap;
use std::path::Path;

use hcpack_core::params::LogBase;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance stamped into every artifact. File keys are names relative to
/// the output directory, so a bundle hashes the same wherever it is written.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Arguments after the program name, output directory elided.
    pub command: Vec<String>,
    pub seed: u64,
    pub log_base: String,
    pub rng: String,
    /// Unix seconds; left out unless asked for, since it breaks byte equality.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    #[serde(default)]
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: Vec<String>, seed: u64, log_base: LogBase, timestamp: bool) -> Self {
        let timestamp = timestamp.then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        RunManifest {
            tool: "hcpack".to_string(),
            version: VERSION.to_string(),
            command,
            seed,
            log_base: log_base.name().to_string(),
            rng: hcpack_core::rng::GENERATOR.to_string(),
            timestamp,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    /// Records the hash of an input file under its file name.
    pub fn add_input(&mut self, path: &Path) -> std::io::Result<()> {
        let bytes = std::fs::read(path)?;
        self.inputs.insert(file_key(path), sha256_hex(&bytes));
        Ok(())
    }

    pub fn add_output(&mut self, name: &str, text: &str) {
        self.outputs.insert(name.to_string(), sha256_hex(text.as_bytes()));
    }
}

fn file_key(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Drops `--out-dir` and its value, in either `--out-dir X` or
/// `--out-dir=X` form.
pub fn normalize_command<I: IntoIterator<Item = String>>(args: I) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out-dir" {
            skip = true;
            continue;
        }
        if a.starts_with("--out-dir=") {
            continue;
        }
        out.push(a);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn out_dir_is_elided() {
        let args = ["reproduce", "--out-dir", "/tmp/x", "--seed", "3", "--out-dir=/y"];
        let got = normalize_command(args.iter().map(|s| s.to_string()));
        assert_eq!(got, ["reproduce", "--seed", "3"]);
    }

    #[test]
    fn timestamp_is_omitted_by_default() {
        let m = RunManifest::new(vec![], 1, LogBase::Natural, false);
        let json = serde_json::to_string(&m).unwrap();
        assert!(!json.contains("timestamp"));
    }
}
