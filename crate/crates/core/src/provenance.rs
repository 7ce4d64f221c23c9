//! Config hashing and seed derivation shared by every emitted artifact.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the effective configuration, lowercase hex.
    pub config_sha256: String,
    pub seed: u64,
    pub tool_version: String,
}

impl Provenance {
    pub fn new(config_json: &str, seed: u64) -> Self {
        Provenance {
            config_sha256: sha256_hex(config_json.as_bytes()),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    /// One-line comment prefixed to CSV tables.
    pub fn csv_comment(&self) -> String {
        format!(
            "# psychoprobe {} config_sha256={} seed={}\n",
            self.tool_version, self.config_sha256, self.seed
        )
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Seed for a named sub-task, from the master seed and a label path.
/// The first eight bytes of SHA-256(master LE || part || 0x00 || ...), read little-endian.
pub fn derive_seed(master: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}
