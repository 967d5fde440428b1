//! Provenance manifest embedded in every output artifact.

use std::path::Path;

use serde::Serialize;

use gsum_core::util::fnv1a64;
use gsum_core::Result;

#[derive(Clone, Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub fnv1a64: String,
}

/// Resolved configuration, input digests, seed, and tool version; rerunning
/// the recorded command line reproduces the artifact byte for byte
/// (wall-time report fields excluded).
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
    pub config: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> RunManifest {
        RunManifest {
            tool: "gsum",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            inputs: Vec::new(),
            config,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            fnv1a64: format!("{:016x}", fnv1a64(&bytes)),
        });
        Ok(())
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }
}
