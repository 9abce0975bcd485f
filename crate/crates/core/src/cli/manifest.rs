use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    /// file path, or `bundled:<name>` for data compiled into the binary
    pub source: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(source: impl Into<String>, bytes: &[u8]) -> Self {
        InputDigest { source: source.into(), sha256: hex::encode(Sha256::digest(bytes)) }
    }
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub tool_version: String,
    /// RFC 3339, UTC
    pub timestamp: String,
    /// every setting after defaults, config file and flags were merged
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    /// file names relative to the output directory
    pub outputs: Vec<String>,
    /// wall-clock figures, kept here because they vary between runs
    #[serde(default)]
    pub timings: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], config: serde_json::Value, inputs: Vec<InputDigest>) -> Self {
        RunManifest {
            command: command.to_string(),
            argv: argv.to_vec(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            config,
            inputs,
            outputs: Vec::new(),
            timings: serde_json::Value::Null,
        }
    }

    pub fn record(&mut self, dir: &Path, written: &[PathBuf]) {
        for p in written {
            let rel = p.strip_prefix(dir).unwrap_or(p);
            self.outputs.push(rel.display().to_string());
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let p = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&p, json).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let p = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
    }
}
