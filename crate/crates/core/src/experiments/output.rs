//! Output files and run manifests.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Crate version plus `git describe` of the build.
pub fn version_string() -> String {
    format!(
        "{} ({})",
        env!("CARGO_PKG_VERSION"),
        env!("ELABC_GIT_DESCRIBE")
    )
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical JSON form of a resolved config.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(config)?))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    /// Resolved configuration the hash was taken over.
    pub config: serde_json::Value,
    /// SHA-256 of each data file written by the run.
    pub files: BTreeMap<String, String>,
}

/// Write `manifest.json` into `dir`, hashing the listed data files there.
pub fn write_manifest<T: Serialize>(
    dir: &Path,
    command: &str,
    config: &T,
    seed: u64,
    files: &[&str],
) -> Result<Manifest> {
    let mut hashes = BTreeMap::new();
    for name in files {
        hashes.insert(name.to_string(), sha256_hex(&std::fs::read(dir.join(name))?));
    }
    let manifest = Manifest {
        command: command.to_string(),
        version: version_string(),
        config_hash: config_hash(config)?,
        seed,
        config: serde_json::to_value(config)?,
        files: hashes,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
