//! Header line shared by every JSON-Lines artifact (snippets, benchmark,
//! journal). It records the producing configuration and its hash.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub kind: String,
    pub format_version: u32,
    pub config_hash: String,
    pub config: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    licokit_header: ArtifactHeader,
}

/// Hex SHA-256 of the canonical JSON of `config`, truncated to 16 bytes.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let value = serde_json::to_value(config).expect("config serializes");
    hash_value(&value)
}

fn hash_value(value: &serde_json::Value) -> String {
    // serde_json's Map is ordered by key, so this is canonical
    let text = serde_json::to_string(value).expect("value serializes");
    hex::encode(&Sha256::digest(text.as_bytes())[..16])
}

impl ArtifactHeader {
    pub fn new<T: Serialize>(kind: &str, config: &T) -> Self {
        let config = serde_json::to_value(config).expect("config serializes");
        Self {
            kind: kind.to_string(),
            format_version: FORMAT_VERSION,
            config_hash: hash_value(&config),
            config,
        }
    }

    pub fn write_line<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let line = serde_json::to_string(&HeaderLine {
            licokit_header: self.clone(),
        })
        .expect("header serializes");
        writeln!(w, "{line}")
    }

    /// Parses `line` if it is a header line.
    pub fn parse(line: &str) -> Option<Self> {
        if !line.trim_start().starts_with("{\"licokit_header\"") {
            return None;
        }
        serde_json::from_str::<HeaderLine>(line).ok().map(|h| h.licokit_header)
    }
}
