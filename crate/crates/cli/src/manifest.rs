//! Run manifests: `manifest.tsv` next to every generated artifact.
//!
//! Inputs are recorded by role and content hash, never by path, so the
//! same inputs under a different directory give the same manifest bytes.
//! Wall-clock duration goes to the log only.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const TOOL_VERSION: &str = concat!("staple-forge ", env!("CARGO_PKG_VERSION"));

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::from(e).context(path.display()))?;
    Ok(sha256_hex(&bytes))
}

/// Hash of a model location: `series.tsv` for a series directory,
/// `meta.tsv` for a single checkpoint. Both embed the table checksums.
pub fn sha256_model(path: &Path) -> Result<String> {
    let series = path.join("series.tsv");
    if series.is_file() {
        sha256_file(&series)
    } else {
        sha256_file(&path.join("meta.tsv"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub command: String,
    pub params: String,
    /// (role, sha256)
    pub inputs: Vec<(String, String)>,
    /// (file name, sha256)
    pub outputs: Vec<(String, String)>,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, params: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            params: params.into(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            version: TOOL_VERSION.to_owned(),
        }
    }

    pub fn input(&mut self, role: &str, sha: String) {
        self.inputs.push((role.to_owned(), sha));
    }

    pub fn output(&mut self, name: &str, bytes: &[u8]) {
        self.outputs.push((name.to_owned(), sha256_hex(bytes)));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command\t{}", self.command);
        let _ = writeln!(out, "params\t{}", self.params);
        for (role, sha) in &self.inputs {
            let _ = writeln!(out, "input\t{role}\t{sha}");
        }
        for (name, sha) in &self.outputs {
            let _ = writeln!(out, "output\t{name}\t{sha}");
        }
        let _ = writeln!(out, "version\t{}", self.version);
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.tsv");
        fs::write(&path, self.render()).map_err(|e| CliError::from(e).context(path.display()))
    }
}
