//! Provenance attached to every output: tool version, format versions and the resolved
//! configuration with its SHA-256.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use featgrind::format::FORMAT_VERSION;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Meta {
    config: Value,
    hash: String,
}

impl Meta {
    /// `config` should hold every resolved flag; its canonical (key-sorted) JSON is hashed.
    pub fn new(config: Value) -> Self {
        let hash = sha256_hex(config.to_string().as_bytes());
        Self { config, hash }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tool": "featgrind",
            "version": env!("CARGO_PKG_VERSION"),
            "format_version": FORMAT_VERSION,
            "config": self.config,
            "config_hash": self.hash,
        })
    }

    /// One-line header for text and CSV outputs.
    pub fn comment_line(&self) -> String {
        format!(
            "# featgrind {} config_hash {}",
            env!("CARGO_PKG_VERSION"),
            self.hash
        )
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes `<out>.meta.json` next to a binary output, recording its size and hash.
pub fn write_sidecar(out: &Path, meta: &Meta, extra: Value) -> anyhow::Result<()> {
    let bytes = std::fs::read(out)?;
    let mut doc = json!({
        "meta": meta.to_json(),
        "output": {
            "bytes": bytes.len(),
            "sha256": sha256_hex(&bytes),
        },
    });
    if !extra.is_null() {
        doc["summary"] = extra;
    }
    write_json(Some(&sidecar_path(out)), &doc)
}

pub fn write_json(out: Option<&Path>, doc: &Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    write_text(out, &text)
}

pub fn write_text(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
