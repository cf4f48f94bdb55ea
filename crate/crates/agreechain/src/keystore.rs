//! Identity key material.
//!
//! One 32-byte Ed25519 seed per identity, stored as a lowercase-hex text file
//! `<id>.key` in the key directory. An in-memory store backs tests and
//! short-lived embedders.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ed25519_dalek::SigningKey;

use crate::crypto::{self, SEED_LEN};
use crate::error::KeyStoreError;

#[derive(Debug, Clone)]
pub struct KeyStore {
    dir: Option<PathBuf>,
    mem: BTreeMap<String, [u8; SEED_LEN]>,
}

impl KeyStore {
    /// A store backed by a directory of `<id>.key` files.
    pub fn open_dir(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()), mem: BTreeMap::new() }
    }

    /// A purely in-memory store.
    pub fn in_memory() -> Self {
        Self { dir: None, mem: BTreeMap::new() }
    }

    /// Store a seed, writing the key file when directory-backed.
    pub fn put(&mut self, id: &str, seed: [u8; SEED_LEN]) -> Result<(), KeyStoreError> {
        if let Some(dir) = &self.dir {
            std::fs::create_dir_all(dir)?;
            std::fs::write(self.key_path(dir, id), format!("{}\n", crypto::to_hex(&seed)))?;
        }
        self.mem.insert(id.to_string(), seed);
        Ok(())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.seed(id).is_ok()
    }

    /// Fetch the seed for an identity.
    pub fn seed(&self, id: &str) -> Result<[u8; SEED_LEN], KeyStoreError> {
        if let Some(seed) = self.mem.get(id) {
            return Ok(*seed);
        }
        let Some(dir) = &self.dir else {
            return Err(KeyStoreError::MissingKey(id.to_string()));
        };
        let path = self.key_path(dir, id);
        let text = std::fs::read_to_string(&path)
            .map_err(|_| KeyStoreError::MissingKey(id.to_string()))?;
        crypto::from_hex_exact::<SEED_LEN>(text.trim()).ok_or_else(|| KeyStoreError::BadSeed {
            id: id.to_string(),
            detail: format!("{} is not a 64-char lowercase hex seed", path.display()),
        })
    }

    /// Signing key for an identity.
    pub fn signing_key(&self, id: &str) -> Result<SigningKey, KeyStoreError> {
        Ok(crypto::signing_key_from_seed(&self.seed(id)?))
    }

    fn key_path(&self, dir: &Path, id: &str) -> PathBuf {
        dir.join(format!("{id}.key"))
    }
}
