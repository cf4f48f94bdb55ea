//! Smart data protection contracts: field-level sharing rules between
//! organizations, enforced at the engine boundary before anything leaves the
//! sharing company.
//!
//! Enforcement is structural, not cryptographic: a policy decides which
//! fields of a machine's payload may flow from one organization to another.
//! Every decision leaves a ShareFiltered audit transaction carrying field
//! names and a payload digest — never the values themselves — so the audit
//! trail cannot leak what the policy dropped.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::crypto;
use crate::error::GovernanceError;
use crate::identity::IdentityKind;
use crate::ledger::{Ledger, TxKind};
use crate::node::Node;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyMode {
    /// Project the payload down to the allowed fields.
    FilterAllowed,
    /// Refuse the whole payload if any disallowed field is present.
    RejectIfAnyDisallowed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GovernancePolicy {
    pub id: String,
    /// Machine whose values the policy governs.
    pub source_machine: String,
    pub from_org: String,
    pub to_org: String,
    pub allowed_fields: BTreeSet<String>,
    pub mode: PolicyMode,
    #[serde(default = "default_active")]
    pub active: bool,
}

fn default_active() -> bool {
    true
}

/// Payload of a PolicyDeployed transaction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyPayload {
    pub policy: GovernancePolicy,
}

/// Field -> value map handed to the filter. Values must be canonical-safe
/// (no floats).
pub type SharePayload = BTreeMap<String, serde_json::Value>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterOutcome {
    Allowed(SharePayload),
    /// The disallowed fields that caused the rejection, sorted.
    Rejected(Vec<String>),
}

/// Audit record of one filter decision: names and a digest only.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShareAuditPayload {
    pub policy_id: String,
    pub decision: String,
    pub kept_fields: Vec<String>,
    pub dropped_fields: Vec<String>,
    pub payload_digest_hex: String,
}

// ---------------------------------------------------------------------------
// Policy view
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct PolicyBook {
    policies: BTreeMap<String, (GovernancePolicy, u64)>,
}

impl PolicyBook {
    pub fn from_ledger(ledger: &Ledger) -> Result<Self, GovernanceError> {
        let mut policies = BTreeMap::new();
        for tx in ledger.iter_txs().filter(|tx| tx.kind == TxKind::PolicyDeployed) {
            let payload: PolicyPayload = serde_json::from_slice(&tx.payload).map_err(|e| {
                GovernanceError::Ledger(crate::error::LedgerError::NonCanonicalPayload(format!(
                    "tx {}: {e}",
                    tx.seq
                )))
            })?;
            policies.insert(payload.policy.id.clone(), (payload.policy, tx.seq));
        }
        Ok(Self { policies })
    }

    pub fn get(&self, id: &str) -> Option<&GovernancePolicy> {
        self.policies.get(id).map(|(p, _)| p)
    }

    pub fn iter(&self) -> impl Iterator<Item = &GovernancePolicy> {
        self.policies.values().map(|(p, _)| p)
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

impl Node {
    /// Deploy a data protection policy, signed by its from_org.
    pub fn deploy_policy(
        &mut self,
        policy: &GovernancePolicy,
        at_ms: u64,
    ) -> Result<u64, GovernanceError> {
        let registry = self.registry()?;
        let book = PolicyBook::from_ledger(self.ledger())?;
        if book.get(&policy.id).is_some() {
            return Err(GovernanceError::DuplicatePolicy(policy.id.clone()));
        }
        if policy.allowed_fields.is_empty() {
            return Err(GovernanceError::ValidationFailed("allowed_fields is empty".into()));
        }
        if policy.from_org == policy.to_org {
            return Err(GovernanceError::ValidationFailed("from_org equals to_org".into()));
        }
        for org in [&policy.from_org, &policy.to_org] {
            match registry.kind(org) {
                None => return Err(GovernanceError::Identity(
                    crate::error::IdentityError::UnknownIdentity(org.clone()),
                )),
                Some(IdentityKind::Organization) => {}
                Some(_) => {
                    return Err(GovernanceError::ValidationFailed(format!(
                        "{org} is not an organization"
                    )))
                }
            }
        }
        match registry.kind(&policy.source_machine) {
            None => {
                return Err(GovernanceError::Identity(
                    crate::error::IdentityError::UnknownIdentity(policy.source_machine.clone()),
                ))
            }
            Some(IdentityKind::Machine) => {}
            Some(_) => {
                return Err(GovernanceError::ValidationFailed(format!(
                    "{} is not a machine",
                    policy.source_machine
                )))
            }
        }

        let payload = PolicyPayload { policy: policy.clone() };
        let tx = self.signed_tx(
            self.ledger().next_seq(),
            at_ms,
            &policy.from_org,
            TxKind::PolicyDeployed,
            &payload,
        )?;
        let seq = tx.seq;
        self.ledger_mut().append(vec![tx])?;
        Ok(seq)
    }

    /// Apply a policy to a payload. Returns the filtered payload (or the
    /// rejection) and appends a ShareFiltered audit transaction authored by
    /// the policy's from_org. The audit never contains dropped values.
    pub fn filter_share(
        &mut self,
        policy_id: &str,
        payload: &SharePayload,
        at_ms: u64,
    ) -> Result<FilterOutcome, GovernanceError> {
        let book = PolicyBook::from_ledger(self.ledger())?;
        let policy = book
            .get(policy_id)
            .ok_or_else(|| GovernanceError::UnknownPolicy(policy_id.to_string()))?;
        if !policy.active {
            return Err(GovernanceError::InactivePolicy(policy_id.to_string()));
        }
        // Digest before deciding, so rejected payloads are auditable too.
        let digest = canonical::canonical_digest(payload)
            .map_err(|e| GovernanceError::ValidationFailed(e.to_string()))?;

        let disallowed: Vec<String> = payload
            .keys()
            .filter(|k| !policy.allowed_fields.contains(*k))
            .cloned()
            .collect();
        let outcome = match policy.mode {
            PolicyMode::FilterAllowed => {
                let projected: SharePayload = payload
                    .iter()
                    .filter(|(k, _)| policy.allowed_fields.contains(*k))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                FilterOutcome::Allowed(projected)
            }
            PolicyMode::RejectIfAnyDisallowed => {
                if disallowed.is_empty() {
                    FilterOutcome::Allowed(payload.clone())
                } else {
                    FilterOutcome::Rejected(disallowed.clone())
                }
            }
        };

        let audit = match &outcome {
            FilterOutcome::Allowed(kept) => ShareAuditPayload {
                policy_id: policy_id.to_string(),
                decision: "allowed".into(),
                kept_fields: kept.keys().cloned().collect(),
                dropped_fields: payload
                    .keys()
                    .filter(|k| !kept.contains_key(*k))
                    .cloned()
                    .collect(),
                payload_digest_hex: crypto::to_hex(&digest),
            },
            FilterOutcome::Rejected(fields) => ShareAuditPayload {
                policy_id: policy_id.to_string(),
                decision: "rejected".into(),
                kept_fields: Vec::new(),
                dropped_fields: fields.clone(),
                payload_digest_hex: crypto::to_hex(&digest),
            },
        };
        let author = policy.from_org.clone();
        let tx = self.signed_tx(
            self.ledger().next_seq(),
            at_ms,
            &author,
            TxKind::ShareFiltered,
            &audit,
        )?;
        self.ledger_mut().append(vec![tx])?;
        Ok(outcome)
    }
}
