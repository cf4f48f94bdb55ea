//! Append-only, hash-chained, tamper-evident transaction store.
//!
//! One block per append call, one block per line in the ledger file
//! (JSON Lines). Every transaction is signed by a registered identity;
//! every block links to its predecessor by SHA-256. A single ordering
//! authority appends; readers may open the file concurrently and see only
//! fully committed blocks.
//!
//! Strictness is load-bearing here: the verifier re-parses the persisted
//! bytes with exact-length lowercase hex, canonical base64, and a
//! byte-equality check against the canonical re-encoding of each line, so a
//! mutated file never has a second valid spelling.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use ed25519_dalek::VerifyingKey;
use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::crypto;
use crate::error::LedgerError;
use crate::identity::{IdentityKind, IdentityRecord};

pub const HASH_LEN: usize = 32;
pub const ZERO_HASH: [u8; HASH_LEN] = [0u8; HASH_LEN];

// ---------------------------------------------------------------------------
// Transactions and blocks
// ---------------------------------------------------------------------------

/// Transaction kind. The set is closed; payload schemas are kind-specific.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TxKind {
    IdentityRegistered,
    AgreementDeployed,
    MetricRecorded,
    ViolationRaised,
    ActionTriggered,
    PolicyDeployed,
    ShareFiltered,
    MaintenanceEvent,
    InvoiceIssued,
    InvoiceSettled,
}

impl TxKind {
    pub const fn as_str(self) -> &'static str {
        match self {
            Self::IdentityRegistered => "IdentityRegistered",
            Self::AgreementDeployed => "AgreementDeployed",
            Self::MetricRecorded => "MetricRecorded",
            Self::ViolationRaised => "ViolationRaised",
            Self::ActionTriggered => "ActionTriggered",
            Self::PolicyDeployed => "PolicyDeployed",
            Self::ShareFiltered => "ShareFiltered",
            Self::MaintenanceEvent => "MaintenanceEvent",
            Self::InvoiceIssued => "InvoiceIssued",
            Self::InvoiceSettled => "InvoiceSettled",
        }
    }
}

impl std::str::FromStr for TxKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| format!("unknown transaction kind {s}"))
    }
}

impl std::fmt::Display for TxKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A signed, sequenced ledger transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub seq: u64,
    /// Caller-supplied logical milliseconds; never a wall-clock read.
    pub timestamp_ms: u64,
    pub author: String,
    pub kind: TxKind,
    /// Canonical-encoded, kind-specific document.
    pub payload: Vec<u8>,
    /// Detached Ed25519 signature by the author over [`Transaction::digest`].
    pub signature: [u8; crypto::SIG_LEN],
}

impl Transaction {
    /// Digest over the signed fields (everything except the signature).
    pub fn digest(&self) -> [u8; HASH_LEN] {
        let value = serde_json::json!({
            "author": self.author,
            "kind": self.kind.as_str(),
            "payload_b64": BASE64.encode(&self.payload),
            "seq": self.seq,
            "timestamp_ms": self.timestamp_ms,
        });
        canonical::canonical_digest(&value).expect("digest preimage is canonical")
    }

    /// Parse the payload document.
    pub fn payload_value(&self) -> Result<serde_json::Value, serde_json::Error> {
        serde_json::from_slice(&self.payload)
    }
}

/// A block of transactions, hash-linked to its predecessor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub height: u64,
    pub prev_hash: [u8; HASH_LEN],
    pub txs: Vec<Transaction>,
    pub block_hash: [u8; HASH_LEN],
}

impl Block {
    /// Block hash: SHA-256 over the canonical encoding of
    /// (height, prev_hash, transaction digests in order).
    pub fn compute_hash(
        height: u64,
        prev_hash: &[u8; HASH_LEN],
        tx_digests: &[[u8; HASH_LEN]],
    ) -> [u8; HASH_LEN] {
        let value = serde_json::json!({
            "height": height,
            "prev_hash": crypto::to_hex(prev_hash),
            "tx_digests": tx_digests.iter().map(|d| crypto::to_hex(d)).collect::<Vec<_>>(),
        });
        canonical::canonical_digest(&value).expect("hash preimage is canonical")
    }
}

// ---------------------------------------------------------------------------
// File records (JSON Lines schema)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TxRecord {
    seq: u64,
    timestamp_ms: u64,
    author: String,
    kind: TxKind,
    payload_b64: String,
    signature_hex: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockRecord {
    height: u64,
    prev_hash: String,
    txs: Vec<TxRecord>,
    block_hash: String,
}

fn encode_block(block: &Block) -> String {
    let record = BlockRecord {
        height: block.height,
        prev_hash: crypto::to_hex(&block.prev_hash),
        txs: block
            .txs
            .iter()
            .map(|tx| TxRecord {
                seq: tx.seq,
                timestamp_ms: tx.timestamp_ms,
                author: tx.author.clone(),
                kind: tx.kind,
                payload_b64: BASE64.encode(&tx.payload),
                signature_hex: crypto::to_hex(&tx.signature),
            })
            .collect(),
        block_hash: crypto::to_hex(&block.block_hash),
    };
    serde_json::to_string(&record).expect("block records serialize")
}

struct ParsedLine {
    block: Block,
    /// Canonical re-encoding of the parsed record, compared against the raw
    /// line so that value-preserving byte changes cannot slip through.
    reencoded: String,
}

fn parse_block_line(line: u64, offset: u64, raw: &str) -> Result<ParsedLine, LedgerError> {
    let decode = |detail: String| LedgerError::Decode { line, offset, detail };
    let record: BlockRecord =
        serde_json::from_str(raw).map_err(|e| decode(e.to_string()))?;

    let prev_hash = crypto::from_hex_exact::<HASH_LEN>(&record.prev_hash)
        .ok_or_else(|| decode("prev_hash is not 64-char lowercase hex".into()))?;
    let block_hash = crypto::from_hex_exact::<HASH_LEN>(&record.block_hash)
        .ok_or_else(|| decode("block_hash is not 64-char lowercase hex".into()))?;
    let mut txs = Vec::with_capacity(record.txs.len());
    for tx in &record.txs {
        let payload = BASE64
            .decode(&tx.payload_b64)
            .map_err(|e| decode(format!("payload_b64 of seq {}: {e}", tx.seq)))?;
        let signature = crypto::from_hex_exact::<{ crypto::SIG_LEN }>(&tx.signature_hex)
            .ok_or_else(|| {
                decode(format!("signature_hex of seq {} is not 128-char lowercase hex", tx.seq))
            })?;
        txs.push(Transaction {
            seq: tx.seq,
            timestamp_ms: tx.timestamp_ms,
            author: tx.author.clone(),
            kind: tx.kind,
            payload,
            signature,
        });
    }
    let reencoded = serde_json::to_string(&record).expect("block records serialize");
    Ok(ParsedLine {
        block: Block { height: record.height, prev_hash, txs, block_hash },
        reencoded,
    })
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// Why a block failed verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvalidReason {
    /// Stored line differs from the canonical encoding of its content.
    CanonicalMismatch,
    HeightMismatch { expected: u64, found: u64 },
    EmptyBlock,
    PrevHashMismatch,
    HashMismatch,
    SeqDiscontinuity { expected: u64, found: u64 },
    UnknownAuthor(String),
    SensorAuthor(String),
    BadSignature(String),
    MalformedPayload(String),
    DuplicateIdentity(String),
}

impl InvalidReason {
    pub fn label(&self) -> &'static str {
        match self {
            Self::CanonicalMismatch => "CanonicalMismatch",
            Self::HeightMismatch { .. } => "HeightMismatch",
            Self::EmptyBlock => "EmptyBlock",
            Self::PrevHashMismatch => "PrevHashMismatch",
            Self::HashMismatch => "HashMismatch",
            Self::SeqDiscontinuity { .. } => "SeqDiscontinuity",
            Self::UnknownAuthor(_) => "UnknownAuthor",
            Self::SensorAuthor(_) => "SensorAuthor",
            Self::BadSignature(_) => "BadSignature",
            Self::MalformedPayload(_) => "MalformedPayload",
            Self::DuplicateIdentity(_) => "DuplicateIdentity",
        }
    }
}

impl std::fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::HeightMismatch { expected, found } => {
                write!(f, "HeightMismatch (expected {expected}, found {found})")
            }
            Self::SeqDiscontinuity { expected, found } => {
                write!(f, "SeqDiscontinuity (expected {expected}, found {found})")
            }
            Self::UnknownAuthor(id) | Self::SensorAuthor(id) | Self::BadSignature(id)
            | Self::DuplicateIdentity(id) => write!(f, "{} ({id})", self.label()),
            Self::MalformedPayload(detail) => write!(f, "MalformedPayload ({detail})"),
            _ => f.write_str(self.label()),
        }
    }
}

/// Outcome of a full-chain verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainStatus {
    Ok,
    FirstInvalid { height: u64, reason: InvalidReason },
}

impl ChainStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, Self::Ok)
    }
}

/// Minimal author view rebuilt while scanning: id -> (key, kind).
#[derive(Default)]
struct AuthorIndex {
    entries: BTreeMap<String, (VerifyingKey, IdentityKind)>,
}

impl AuthorIndex {
    /// Check one transaction against the index and absorb registrations.
    ///
    /// The very first transaction of the chain (seq 0) may be the bootstrap
    /// root: a self-signed IdentityRegistered whose key comes from its own
    /// payload. Every later author must already be indexed.
    fn check_and_absorb(&mut self, tx: &Transaction, expected_seq: u64) -> Result<(), InvalidReason> {
        if tx.seq != expected_seq {
            return Err(InvalidReason::SeqDiscontinuity { expected: expected_seq, found: tx.seq });
        }

        let registration = if tx.kind == TxKind::IdentityRegistered {
            let record: IdentityRecord = serde_json::from_slice(&tx.payload)
                .map_err(|e| InvalidReason::MalformedPayload(e.to_string()))?;
            if self.entries.contains_key(&record.id) {
                return Err(InvalidReason::DuplicateIdentity(record.id));
            }
            Some(record)
        } else {
            None
        };

        let bootstrap = tx.seq == 0
            && registration
                .as_ref()
                .is_some_and(|r| r.id == tx.author && r.registered_by == tx.author);

        let author_key = if bootstrap {
            let record = registration.as_ref().expect("bootstrap implies registration");
            record
                .verifying_key()
                .ok_or_else(|| InvalidReason::MalformedPayload("bad verification key".into()))?
        } else {
            match self.entries.get(&tx.author) {
                None => return Err(InvalidReason::UnknownAuthor(tx.author.clone())),
                Some((_, IdentityKind::Sensor)) => {
                    return Err(InvalidReason::SensorAuthor(tx.author.clone()))
                }
                Some((key, _)) => *key,
            }
        };

        if !crypto::verify_digest(&author_key, &tx.digest(), &tx.signature) {
            return Err(InvalidReason::BadSignature(tx.author.clone()));
        }

        if let Some(record) = registration {
            let key = record
                .verifying_key()
                .ok_or_else(|| InvalidReason::MalformedPayload("bad verification key".into()))?;
            self.entries.insert(record.id.clone(), (key, record.kind));
        }
        Ok(())
    }
}

/// Verify a raw ledger file image.
///
/// Returns [`ChainStatus::FirstInvalid`] with the lowest failing height, or
/// `Err(LedgerError::Decode)` with the byte offset when a line cannot even be
/// decoded.
pub fn verify_bytes(raw: &[u8]) -> Result<ChainStatus, LedgerError> {
    if raw.is_empty() {
        return Ok(ChainStatus::Ok);
    }
    let mut index = AuthorIndex::default();
    let mut prev_hash = ZERO_HASH;
    let mut expected_seq = 0u64;
    let mut offset = 0usize;
    let mut height = 0u64;

    while offset < raw.len() {
        let rest = &raw[offset..];
        let Some(nl) = rest.iter().position(|&b| b == b'\n') else {
            return Err(LedgerError::Decode {
                line: height,
                offset: raw.len() as u64,
                detail: "truncated final line (missing newline)".into(),
            });
        };
        let line_bytes = &rest[..nl];
        let line = std::str::from_utf8(line_bytes).map_err(|e| LedgerError::Decode {
            line: height,
            offset: offset as u64,
            detail: format!("invalid UTF-8: {e}"),
        })?;
        let parsed = parse_block_line(height, offset as u64, line)?;
        let block = &parsed.block;

        let fail = |reason: InvalidReason| Ok(ChainStatus::FirstInvalid { height, reason });
        if parsed.reencoded != line {
            return fail(InvalidReason::CanonicalMismatch);
        }
        if block.height != height {
            return fail(InvalidReason::HeightMismatch { expected: height, found: block.height });
        }
        if block.txs.is_empty() {
            return fail(InvalidReason::EmptyBlock);
        }
        if block.prev_hash != prev_hash {
            return fail(InvalidReason::PrevHashMismatch);
        }
        let digests: Vec<[u8; HASH_LEN]> = block.txs.iter().map(Transaction::digest).collect();
        if Block::compute_hash(block.height, &block.prev_hash, &digests) != block.block_hash {
            return fail(InvalidReason::HashMismatch);
        }
        for tx in &block.txs {
            if let Err(reason) = index.check_and_absorb(tx, expected_seq) {
                return fail(reason);
            }
            expected_seq += 1;
        }

        prev_hash = block.block_hash;
        offset += nl + 1;
        height += 1;
    }
    Ok(ChainStatus::Ok)
}

// ---------------------------------------------------------------------------
// Filters
// ---------------------------------------------------------------------------

/// Query filter; all conditions are conjunctive, `seq_range` is inclusive.
#[derive(Debug, Clone, Default)]
pub struct TxFilter {
    pub kind: Option<TxKind>,
    pub author: Option<String>,
    pub seq_range: Option<(u64, u64)>,
}

impl TxFilter {
    pub fn kind(kind: TxKind) -> Self {
        Self { kind: Some(kind), ..Self::default() }
    }

    pub fn author(author: impl Into<String>) -> Self {
        Self { author: Some(author.into()), ..Self::default() }
    }

    pub fn seq_range(lo: u64, hi: u64) -> Self {
        Self { seq_range: Some((lo, hi)), ..Self::default() }
    }

    fn matches(&self, tx: &Transaction) -> bool {
        self.kind.is_none_or(|k| k == tx.kind)
            && self.author.as_ref().is_none_or(|a| *a == tx.author)
            && self.seq_range.is_none_or(|(lo, hi)| tx.seq >= lo && tx.seq <= hi)
    }
}

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

/// File-backed ledger handle. Appends are serialized through `&mut self` and
/// an exclusive advisory lock on the file; reads see committed blocks only.
#[derive(Debug)]
pub struct Ledger {
    path: PathBuf,
    file: File,
    blocks: Vec<Block>,
    next_seq: u64,
}

impl Ledger {
    /// Create an empty ledger file. Fails if the file exists.
    pub fn create(path: impl AsRef<Path>) -> Result<Self, LedgerError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(&path)
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::AlreadyExists {
                    LedgerError::AlreadyExists(path.display().to_string())
                } else {
                    LedgerError::Io(e)
                }
            })?;
        Ok(Self { path, file, blocks: Vec::new(), next_seq: 0 })
    }

    /// Open an existing ledger, strictly decoding every block line.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LedgerError> {
        let path = path.as_ref().to_path_buf();
        let raw = std::fs::read(&path)?;
        let blocks = Self::decode_all(&raw)?;
        let next_seq = blocks.last().and_then(|b| b.txs.last()).map_or(0, |tx| tx.seq + 1);
        let file = OpenOptions::new().append(true).open(&path)?;
        Ok(Self { path, file, blocks, next_seq })
    }

    fn decode_all(raw: &[u8]) -> Result<Vec<Block>, LedgerError> {
        let mut blocks = Vec::new();
        let mut offset = 0usize;
        while offset < raw.len() {
            let rest = &raw[offset..];
            let Some(nl) = rest.iter().position(|&b| b == b'\n') else {
                return Err(LedgerError::Decode {
                    line: blocks.len() as u64,
                    offset: raw.len() as u64,
                    detail: "truncated final line (missing newline)".into(),
                });
            };
            let line = std::str::from_utf8(&rest[..nl]).map_err(|e| LedgerError::Decode {
                line: blocks.len() as u64,
                offset: offset as u64,
                detail: format!("invalid UTF-8: {e}"),
            })?;
            blocks.push(parse_block_line(blocks.len() as u64, offset as u64, line)?.block);
            offset += nl + 1;
        }
        Ok(blocks)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Number of blocks (the next block's height).
    pub fn height(&self) -> u64 {
        self.blocks.len() as u64
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn tx_by_seq(&self, seq: u64) -> Option<&Transaction> {
        self.iter_txs().find(|tx| tx.seq == seq)
    }

    pub fn iter_txs(&self) -> impl Iterator<Item = &Transaction> {
        self.blocks.iter().flat_map(|b| b.txs.iter())
    }

    /// Append one block containing the given transactions.
    ///
    /// The whole batch is validated first (seq continuity, author known and
    /// not a sensor, signature, canonical payload); any failure rejects the
    /// batch atomically and nothing is written.
    pub fn append(&mut self, txs: Vec<Transaction>) -> Result<u64, LedgerError> {
        if txs.is_empty() {
            return Err(LedgerError::EmptyBatch);
        }
        for tx in &txs {
            let value: serde_json::Value = serde_json::from_slice(&tx.payload)
                .map_err(|e| LedgerError::NonCanonicalPayload(e.to_string()))?;
            let canon = canonical::to_canonical_string(&value)
                .map_err(|e| LedgerError::NonCanonicalPayload(e.to_string()))?;
            if canon.as_bytes() != tx.payload.as_slice() {
                return Err(LedgerError::NonCanonicalPayload(format!(
                    "payload of seq {} is not canonically encoded",
                    tx.seq
                )));
            }
        }

        let mut index = AuthorIndex::default();
        let mut replay_seq = 0u64;
        for block in &self.blocks {
            for tx in &block.txs {
                index
                    .check_and_absorb(tx, replay_seq)
                    .map_err(|r| Self::reason_to_error(&r))?;
                replay_seq += 1;
            }
        }
        let mut expected = self.next_seq;
        for tx in &txs {
            index.check_and_absorb(tx, expected).map_err(|r| Self::reason_to_error(&r))?;
            expected += 1;
        }

        let height = self.height();
        let prev_hash = self.blocks.last().map_or(ZERO_HASH, |b| b.block_hash);
        let digests: Vec<[u8; HASH_LEN]> = txs.iter().map(Transaction::digest).collect();
        let block_hash = Block::compute_hash(height, &prev_hash, &digests);
        let block = Block { height, prev_hash, txs, block_hash };

        let mut line = encode_block(&block);
        line.push('\n');
        lock_exclusive(&self.file)?;
        let write_result = self.file.write_all(line.as_bytes()).and_then(|()| self.file.flush());
        unlock(&self.file);
        write_result?;

        self.next_seq = expected;
        self.blocks.push(block);
        Ok(height)
    }

    fn reason_to_error(reason: &InvalidReason) -> LedgerError {
        match reason {
            InvalidReason::UnknownAuthor(id) => LedgerError::UnknownAuthor(id.clone()),
            InvalidReason::BadSignature(id) => LedgerError::BadSignature(id.clone()),
            InvalidReason::SensorAuthor(id) => LedgerError::SensorAuthor(id.clone()),
            InvalidReason::SeqDiscontinuity { expected, found } => {
                LedgerError::SeqDiscontinuity { expected: *expected, found: *found }
            }
            InvalidReason::MalformedPayload(d) => LedgerError::NonCanonicalPayload(d.clone()),
            InvalidReason::DuplicateIdentity(id) => {
                LedgerError::NonCanonicalPayload(format!("duplicate identity {id}"))
            }
            other => LedgerError::NonCanonicalPayload(other.to_string()),
        }
    }

    /// Re-read the persisted file and verify the whole chain.
    pub fn verify_chain(&self) -> Result<ChainStatus, LedgerError> {
        let raw = std::fs::read(&self.path)?;
        verify_bytes(&raw)
    }

    /// Matching transactions in seq order. Pure read, never fails.
    pub fn query(&self, filter: &TxFilter) -> Vec<&Transaction> {
        self.iter_txs().filter(|tx| filter.matches(tx)).collect()
    }
}

#[cfg(unix)]
fn lock_exclusive(file: &File) -> std::io::Result<()> {
    use std::os::unix::io::AsRawFd;
    // Advisory lock; serializes writers across processes.
    let rc = unsafe { libc::flock(file.as_raw_fd(), libc::LOCK_EX) };
    if rc != 0 {
        return Err(std::io::Error::last_os_error());
    }
    Ok(())
}

#[cfg(unix)]
fn unlock(file: &File) {
    use std::os::unix::io::AsRawFd;
    unsafe {
        libc::flock(file.as_raw_fd(), libc::LOCK_UN);
    }
}

#[cfg(not(unix))]
fn lock_exclusive(_file: &File) -> std::io::Result<()> {
    Ok(())
}

#[cfg(not(unix))]
fn unlock(_file: &File) {}
