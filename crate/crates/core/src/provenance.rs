//! Header block stamped on every artifact: config hash, seed and version.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    /// Hashes the compact JSON form of `config`.
    pub fn for_config<T: Serialize>(config: &T, seed: u64) -> crate::Result<Self> {
        let bytes = serde_json::to_vec(config)?;
        Ok(Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: sha256_hex(&bytes),
            seed,
        })
    }

    /// `# key: value` lines for text artifacts.
    pub fn comment_lines(&self) -> String {
        format!(
            "# ebfir {}\n# config_sha256: {}\n# seed: {}\n",
            self.version, self.config_sha256, self.seed
        )
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
