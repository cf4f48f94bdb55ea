//! The single ordering authority over one ledger file.
//!
//! A [`Node`] owns the ledger handle and the key material it needs to sign
//! transactions on behalf of local identities. All domain operations
//! (registration, agreement deployment, metric recording, policy filtering,
//! maintenance transitions) are methods on `Node`, implemented in their
//! owning modules.
//!
//! Bootstrap: creating a node registers the root organization as the chain's
//! first transaction, self-signed with the key embedded in its own payload.
//! Everything afterwards must trace back to an earlier registration.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::canonical;
use crate::crypto;
use crate::error::{IdentityError, LedgerError};
use crate::identity::{Identity, IdentityKind, IdentityRecord, Registry};
use crate::keystore::KeyStore;
use crate::ledger::{Ledger, Transaction, TxKind};

#[derive(Debug)]
pub struct Node {
    ledger: Ledger,
    keys: KeyStore,
    root: String,
    /// Off-ledger maintenance state: case id -> fix proof token, held between
    /// record_fix and finish_maintenance (that step writes no transaction).
    fix_overlay: BTreeMap<String, String>,
}

impl Node {
    /// Create a new ledger and register the bootstrap root organization.
    ///
    /// The key store must already hold the root's seed.
    pub fn create(
        path: impl AsRef<Path>,
        keys: KeyStore,
        root_id: &str,
        root_display_name: &str,
        at_ms: u64,
    ) -> Result<Self, IdentityError> {
        let mut ledger = Ledger::create(path)?;
        let root_key = keys.signing_key(root_id)?;
        let identity = Identity {
            id: root_id.to_string(),
            kind: IdentityKind::Organization,
            display_name: root_display_name.to_string(),
            verification_key: root_key.verifying_key().to_bytes(),
            registered_by: root_id.to_string(),
            gateway_id: None,
        };
        let record = IdentityRecord::from_identity(&identity, &Default::default());
        let payload = canonical::canonical_bytes(&record)?;
        let mut tx = Transaction {
            seq: 0,
            timestamp_ms: at_ms,
            author: root_id.to_string(),
            kind: TxKind::IdentityRegistered,
            payload,
            signature: [0u8; crypto::SIG_LEN],
        };
        tx.signature = crypto::sign_digest(&root_key, &tx.digest());
        ledger.append(vec![tx])?;
        Ok(Self { ledger, keys, root: root_id.to_string(), fix_overlay: BTreeMap::new() })
    }

    /// Open an existing ledger; the root is the author of the first
    /// transaction.
    pub fn open(path: impl AsRef<Path>, keys: KeyStore) -> Result<Self, IdentityError> {
        let ledger = Ledger::open(path)?;
        let root = ledger
            .iter_txs()
            .next()
            .map(|tx| tx.author.clone())
            .ok_or_else(|| {
                IdentityError::Ledger(LedgerError::NonCanonicalPayload(
                    "ledger has no bootstrap registration".into(),
                ))
            })?;
        Ok(Self { ledger, keys, root, fix_overlay: BTreeMap::new() })
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut Ledger {
        &mut self.ledger
    }

    pub fn keys(&self) -> &KeyStore {
        &self.keys
    }

    pub fn keys_mut(&mut self) -> &mut KeyStore {
        &mut self.keys
    }

    /// The bootstrap root organization; also the author of engine-generated
    /// transactions (violations, triggered actions).
    pub fn root(&self) -> &str {
        &self.root
    }

    /// Rebuild the identity view from the ledger.
    pub fn registry(&self) -> Result<Registry, IdentityError> {
        Registry::from_ledger(&self.ledger)
    }

    /// Build and sign a transaction authored by `author` with the key store's
    /// seed for that identity.
    pub(crate) fn signed_tx<T: Serialize>(
        &self,
        seq: u64,
        at_ms: u64,
        author: &str,
        kind: TxKind,
        payload: &T,
    ) -> Result<Transaction, IdentityError> {
        let payload = canonical::canonical_bytes(payload)?;
        let mut tx = Transaction {
            seq,
            timestamp_ms: at_ms,
            author: author.to_string(),
            kind,
            payload,
            signature: [0u8; crypto::SIG_LEN],
        };
        let key = self.keys.signing_key(author)?;
        tx.signature = crypto::sign_digest(&key, &tx.digest());
        Ok(tx)
    }

    /// Off-ledger fix proofs (case id -> proof token), exported so embedders
    /// can persist them across processes.
    pub fn fix_overlay(&self) -> &BTreeMap<String, String> {
        &self.fix_overlay
    }

    pub fn set_fix_overlay(&mut self, overlay: BTreeMap<String, String>) {
        self.fix_overlay = overlay;
    }

    pub(crate) fn fix_overlay_mut(&mut self) -> &mut BTreeMap<String, String> {
        &mut self.fix_overlay
    }
}
