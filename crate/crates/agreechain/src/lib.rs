//! Cross-company agreements on a tamper-evident ledger.
//!
//! The crate digitizes the machinery it takes for two companies to run a
//! contract without a trusted middleman:
//!
//! - [`ledger`] — an append-only, hash-chained, Ed25519-signed transaction
//!   store with full-chain verification (JSON Lines on disk).
//! - [`identity`] — registered persons, organizations, machines, gateways and
//!   sensors; sensors are keyless and submit through their gateway.
//! - [`agreements`] — executable SLA/PLA/BLA contracts: metric windows,
//!   threshold comparators, violation latching and triggered actions.
//! - [`governance`] — field-level data-sharing policies applied before
//!   anything leaves the sharing company, with a value-free audit trail.
//! - [`maintenance`] — a ledger-anchored maintenance case state machine from
//!   contract deployment to invoice settlement.
//! - [`simulator`] — the same maintenance case as workflow models (with and
//!   without the ledger) under Monte Carlo failure injection.
//!
//! Everything hashed or signed uses canonical JSON (sorted keys, no
//! whitespace, integers only), so ledgers built from the same inputs are
//! byte-identical.

pub mod agreements;
pub mod canonical;
pub mod crypto;
pub mod error;
pub mod governance;
pub mod identity;
pub mod keystore;
pub mod ledger;
pub mod maintenance;
pub mod node;
pub mod simulator;

pub use error::{
    AgreementError, CanonicalError, GovernanceError, IdentityError, KeyStoreError, LedgerError,
    MaintenanceError, SimError,
};
pub use keystore::KeyStore;
pub use ledger::{Block, ChainStatus, InvalidReason, Ledger, Transaction, TxFilter, TxKind};
pub use node::Node;
