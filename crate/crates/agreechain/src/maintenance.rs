//! Ledger-anchored maintenance cases.
//!
//! A case walks a fixed eight-state path:
//!
//! ```text
//! Deployed -> ErrorDetected -> OrderAccepted -> InMaintenance
//!          -> Fixed -> Finished -> Invoiced -> Settled
//! ```
//!
//! Each transition appends exactly one transaction, with one deliberate
//! exception: the fix itself happens at the machine and writes nothing; its
//! proof token is held off-ledger until finish_maintenance anchors it.
//! Notifications are reads, not transactions — a case is "pending" for the
//! organization that must author the next one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::MaintenanceError;
use crate::identity::{IdentityKind, Registry, Role};
use crate::ledger::{Ledger, TxKind};
use crate::node::Node;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaintenanceType {
    /// Regular checks and replacements before anything breaks.
    Preventive,
    /// Repair after a breakdown.
    Corrective,
    /// Upgrading a machine with more capable parts.
    Improvement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseState {
    Deployed,
    ErrorDetected,
    OrderAccepted,
    InMaintenance,
    Fixed,
    Finished,
    Invoiced,
    Settled,
}

impl CaseState {
    pub const ALL: [CaseState; 8] = [
        Self::Deployed,
        Self::ErrorDetected,
        Self::OrderAccepted,
        Self::InMaintenance,
        Self::Fixed,
        Self::Finished,
        Self::Invoiced,
        Self::Settled,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            Self::Deployed => "Deployed",
            Self::ErrorDetected => "ErrorDetected",
            Self::OrderAccepted => "OrderAccepted",
            Self::InMaintenance => "InMaintenance",
            Self::Fixed => "Fixed",
            Self::Finished => "Finished",
            Self::Invoiced => "Invoiced",
            Self::Settled => "Settled",
        }
    }
}

impl std::fmt::Display for CaseState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What opened the case's work: a detected error code for corrective cases,
/// a schedule for preventive ones, an upgrade request for improvements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum CaseTrigger {
    ErrorCode(u32),
    Scheduled(String),
    UpgradeRequest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvoiceStatus {
    Issued,
    Settled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invoice {
    pub id: String,
    pub case_id: String,
    pub issuer: String,
    /// Scaled integer currency amount.
    pub amount: i64,
    pub status: InvoiceStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub state: CaseState,
    /// Seq of the anchoring transaction.
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaintenanceCase {
    pub id: String,
    pub machine: String,
    pub customer: String,
    pub provider: String,
    pub maintenance_type: MaintenanceType,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_code: Option<u32>,
    pub state: CaseState,
    /// Ledger-anchored transitions only; the off-ledger Fixed state does not
    /// appear here.
    pub history: Vec<HistoryEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub technician: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fix_proof: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invoice: Option<Invoice>,
}

// ---------------------------------------------------------------------------
// Payload documents
// ---------------------------------------------------------------------------

/// MaintenanceEvent payload; `event` names the state entered.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaintenancePayload {
    pub case_id: String,
    pub event: CaseState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub customer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub machine: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maintenance_type: Option<MaintenanceType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<CaseTrigger>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub technician: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proof_token: Option<String>,
}

impl MaintenancePayload {
    fn new(case_id: &str, event: CaseState) -> Self {
        Self {
            case_id: case_id.to_string(),
            event,
            customer: None,
            provider: None,
            machine: None,
            maintenance_type: None,
            trigger: None,
            technician: None,
            proof_token: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvoiceIssuedPayload {
    pub invoice_id: String,
    pub case_id: String,
    pub amount: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvoiceSettledPayload {
    pub invoice_id: String,
    pub case_id: String,
}

// ---------------------------------------------------------------------------
// Case view
// ---------------------------------------------------------------------------

/// Case view rebuilt from MaintenanceEvent / Invoice transactions, plus the
/// off-ledger fix overlay.
#[derive(Debug, Clone, Default)]
pub struct CaseBook {
    cases: BTreeMap<String, MaintenanceCase>,
}

impl CaseBook {
    pub fn from_ledger(
        ledger: &Ledger,
        fix_overlay: &BTreeMap<String, String>,
    ) -> Result<Self, MaintenanceError> {
        let mut cases: BTreeMap<String, MaintenanceCase> = BTreeMap::new();
        for tx in ledger.iter_txs() {
            match tx.kind {
                TxKind::MaintenanceEvent => {
                    let payload: MaintenancePayload = serde_json::from_slice(&tx.payload)
                        .map_err(|e| bad_payload(tx.seq, &e))?;
                    match payload.event {
                        CaseState::Deployed => {
                            let case = MaintenanceCase {
                                id: payload.case_id.clone(),
                                machine: payload.machine.clone().unwrap_or_default(),
                                customer: payload.customer.clone().unwrap_or_default(),
                                provider: payload.provider.clone().unwrap_or_default(),
                                maintenance_type: payload
                                    .maintenance_type
                                    .unwrap_or(MaintenanceType::Corrective),
                                error_code: None,
                                state: CaseState::Deployed,
                                history: vec![HistoryEntry { state: CaseState::Deployed, seq: tx.seq }],
                                technician: None,
                                fix_proof: None,
                                invoice: None,
                            };
                            cases.insert(payload.case_id, case);
                        }
                        event => {
                            let case = cases.get_mut(&payload.case_id).ok_or_else(|| {
                                MaintenanceError::UnknownCase(payload.case_id.clone())
                            })?;
                            case.state = event;
                            case.history.push(HistoryEntry { state: event, seq: tx.seq });
                            if let Some(CaseTrigger::ErrorCode(code)) = payload.trigger {
                                case.error_code = Some(code);
                            }
                            if payload.technician.is_some() {
                                case.technician = payload.technician;
                            }
                            if payload.proof_token.is_some() {
                                case.fix_proof = payload.proof_token;
                            }
                        }
                    }
                }
                TxKind::InvoiceIssued => {
                    let payload: InvoiceIssuedPayload = serde_json::from_slice(&tx.payload)
                        .map_err(|e| bad_payload(tx.seq, &e))?;
                    let case = cases
                        .get_mut(&payload.case_id)
                        .ok_or_else(|| MaintenanceError::UnknownCase(payload.case_id.clone()))?;
                    case.state = CaseState::Invoiced;
                    case.history.push(HistoryEntry { state: CaseState::Invoiced, seq: tx.seq });
                    case.invoice = Some(Invoice {
                        id: payload.invoice_id,
                        case_id: payload.case_id,
                        issuer: case.provider.clone(),
                        amount: payload.amount,
                        status: InvoiceStatus::Issued,
                    });
                }
                TxKind::InvoiceSettled => {
                    let payload: InvoiceSettledPayload = serde_json::from_slice(&tx.payload)
                        .map_err(|e| bad_payload(tx.seq, &e))?;
                    let case = cases
                        .get_mut(&payload.case_id)
                        .ok_or_else(|| MaintenanceError::UnknownCase(payload.case_id.clone()))?;
                    case.state = CaseState::Settled;
                    case.history.push(HistoryEntry { state: CaseState::Settled, seq: tx.seq });
                    if let Some(invoice) = &mut case.invoice {
                        invoice.status = InvoiceStatus::Settled;
                    }
                }
                _ => {}
            }
        }
        // The off-ledger fix: an InMaintenance case with a held proof is Fixed.
        for (case_id, proof) in fix_overlay {
            if let Some(case) = cases.get_mut(case_id) {
                if case.state == CaseState::InMaintenance {
                    case.state = CaseState::Fixed;
                    case.fix_proof = Some(proof.clone());
                }
            }
        }
        Ok(Self { cases })
    }

    pub fn get(&self, id: &str) -> Option<&MaintenanceCase> {
        self.cases.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &MaintenanceCase> {
        self.cases.values()
    }
}

fn bad_payload(seq: u64, err: &serde_json::Error) -> MaintenanceError {
    MaintenanceError::Ledger(crate::error::LedgerError::NonCanonicalPayload(format!(
        "tx {seq}: {err}"
    )))
}

/// A case awaiting an organization's action.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PendingCase {
    pub case_id: String,
    pub state: CaseState,
    pub awaiting: String,
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

impl Node {
    pub fn case_book(&self) -> Result<CaseBook, MaintenanceError> {
        CaseBook::from_ledger(self.ledger(), self.fix_overlay())
    }

    pub fn maintenance_case(&self, case_id: &str) -> Result<MaintenanceCase, MaintenanceError> {
        self.case_book()?
            .get(case_id)
            .cloned()
            .ok_or_else(|| MaintenanceError::UnknownCase(case_id.to_string()))
    }

    /// Open a maintenance contract case between a customer and a provider
    /// for one machine. Authored by the customer.
    pub fn deploy_case(
        &mut self,
        case_id: &str,
        customer: &str,
        provider: &str,
        machine: &str,
        maintenance_type: MaintenanceType,
        at_ms: u64,
    ) -> Result<u64, MaintenanceError> {
        let registry = self.registry()?;
        if self.case_book()?.get(case_id).is_some() {
            return Err(MaintenanceError::IllegalTransition {
                case: case_id.to_string(),
                state: "already deployed".to_string(),
                op: "deploy_case",
            });
        }
        require_org_role(&registry, customer, Role::Customer)?;
        require_org_role(&registry, provider, Role::MaintenanceProvider)?;
        match registry.kind(machine) {
            None => {
                return Err(MaintenanceError::Identity(
                    crate::error::IdentityError::UnknownIdentity(machine.to_string()),
                ))
            }
            Some(IdentityKind::Machine) => {}
            Some(kind) => {
                return Err(MaintenanceError::WrongRole(format!(
                    "{machine} is a {kind}, expected a Machine"
                )))
            }
        }

        let mut payload = MaintenancePayload::new(case_id, CaseState::Deployed);
        payload.customer = Some(customer.to_string());
        payload.provider = Some(provider.to_string());
        payload.machine = Some(machine.to_string());
        payload.maintenance_type = Some(maintenance_type);
        self.append_case_tx(customer, payload, at_ms)
    }

    /// The machine reports the error that opened the work (corrective cases).
    pub fn detect_error(
        &mut self,
        case_id: &str,
        error_code: u32,
        actor: &str,
        at_ms: u64,
    ) -> Result<u64, MaintenanceError> {
        self.open_trigger(case_id, CaseTrigger::ErrorCode(error_code), actor, at_ms)
    }

    /// Generalized opener: detected error, due schedule, or upgrade request.
    /// Authored by the case's machine.
    pub fn open_trigger(
        &mut self,
        case_id: &str,
        trigger: CaseTrigger,
        actor: &str,
        at_ms: u64,
    ) -> Result<u64, MaintenanceError> {
        let case = self.expect_state(case_id, CaseState::Deployed, "detect_error")?;
        require_actor(&case, &case.machine.clone(), actor)?;
        let mut payload = MaintenancePayload::new(case_id, CaseState::ErrorDetected);
        payload.trigger = Some(trigger);
        let machine = case.machine;
        self.append_case_tx(&machine, payload, at_ms)
    }

    /// The provider accepts the maintenance order.
    pub fn accept_order(
        &mut self,
        case_id: &str,
        actor: &str,
        at_ms: u64,
    ) -> Result<u64, MaintenanceError> {
        let case = self.expect_state(case_id, CaseState::ErrorDetected, "accept_order")?;
        require_actor(&case, &case.provider.clone(), actor)?;
        let payload = MaintenancePayload::new(case_id, CaseState::OrderAccepted);
        let provider = case.provider;
        self.append_case_tx(&provider, payload, at_ms)
    }

    /// The machine enters maintenance mode under a technician's hands.
    /// Authored by the machine; the technician must hold the Technician role.
    pub fn set_maintenance_mode(
        &mut self,
        case_id: &str,
        technician: &str,
        actor: &str,
        at_ms: u64,
    ) -> Result<u64, MaintenanceError> {
        let case = self.expect_state(case_id, CaseState::OrderAccepted, "set_maintenance_mode")?;
        require_actor(&case, &case.machine.clone(), actor)?;
        let registry = self.registry()?;
        let entry = registry.get(technician).ok_or_else(|| {
            MaintenanceError::Identity(crate::error::IdentityError::UnknownIdentity(
                technician.to_string(),
            ))
        })?;
        if entry.identity.kind != IdentityKind::Person || !entry.roles.contains(&Role::Technician) {
            return Err(MaintenanceError::WrongRole(format!(
                "{technician} is not a Person with the Technician role"
            )));
        }
        let mut payload = MaintenancePayload::new(case_id, CaseState::InMaintenance);
        payload.technician = Some(technician.to_string());
        let machine = case.machine;
        self.append_case_tx(&machine, payload, at_ms)
    }

    /// The fix happens at the machine and writes no transaction; the proof
    /// token is held until finish_maintenance anchors it.
    pub fn record_fix(&mut self, case_id: &str, proof_token: &str) -> Result<(), MaintenanceError> {
        let _ = self.expect_state(case_id, CaseState::InMaintenance, "record_fix")?;
        if proof_token.trim().is_empty() {
            return Err(MaintenanceError::ValidationFailed("empty proof token".into()));
        }
        self.fix_overlay_mut().insert(case_id.to_string(), proof_token.to_string());
        Ok(())
    }

    /// Finish the maintenance; the transaction carries the fix proof token.
    pub fn finish_maintenance(
        &mut self,
        case_id: &str,
        actor: &str,
        at_ms: u64,
    ) -> Result<u64, MaintenanceError> {
        let case = self.expect_state(case_id, CaseState::Fixed, "finish_maintenance")?;
        require_actor(&case, &case.machine.clone(), actor)?;
        let proof = case
            .fix_proof
            .clone()
            .ok_or_else(|| MaintenanceError::ValidationFailed("missing fix proof".into()))?;
        let mut payload = MaintenancePayload::new(case_id, CaseState::Finished);
        payload.proof_token = Some(proof);
        let machine = case.machine;
        let seq = self.append_case_tx(&machine, payload, at_ms)?;
        self.fix_overlay_mut().remove(case_id);
        Ok(seq)
    }

    /// The provider sends the invoice through the ledger.
    pub fn issue_invoice(
        &mut self,
        case_id: &str,
        invoice_id: &str,
        amount: i64,
        actor: &str,
        at_ms: u64,
    ) -> Result<u64, MaintenanceError> {
        let case = self.expect_state(case_id, CaseState::Finished, "issue_invoice")?;
        require_actor(&case, &case.provider.clone(), actor)?;
        if amount <= 0 {
            return Err(MaintenanceError::ValidationFailed("invoice amount must be positive".into()));
        }
        let payload = InvoiceIssuedPayload {
            invoice_id: invoice_id.to_string(),
            case_id: case_id.to_string(),
            amount,
        };
        let provider = case.provider;
        let tx = self.signed_tx(
            self.ledger().next_seq(),
            at_ms,
            &provider,
            TxKind::InvoiceIssued,
            &payload,
        )?;
        let seq = tx.seq;
        self.ledger_mut().append(vec![tx])?;
        Ok(seq)
    }

    /// The customer settles the invoice and documents it.
    pub fn settle_invoice(
        &mut self,
        case_id: &str,
        actor: &str,
        at_ms: u64,
    ) -> Result<u64, MaintenanceError> {
        let case = self
            .case_book()?
            .get(case_id)
            .cloned()
            .ok_or_else(|| MaintenanceError::UnknownCase(case_id.to_string()))?;
        if case.state == CaseState::Settled {
            return Err(MaintenanceError::DoubleSettlement(case_id.to_string()));
        }
        if case.state != CaseState::Invoiced {
            return Err(MaintenanceError::IllegalTransition {
                case: case_id.to_string(),
                state: case.state.to_string(),
                op: "settle_invoice",
            });
        }
        require_actor(&case, &case.customer.clone(), actor)?;
        let invoice = case
            .invoice
            .as_ref()
            .ok_or_else(|| MaintenanceError::ValidationFailed("case has no invoice".into()))?;
        let payload = InvoiceSettledPayload {
            invoice_id: invoice.id.clone(),
            case_id: case_id.to_string(),
        };
        let customer = case.customer.clone();
        let tx = self.signed_tx(
            self.ledger().next_seq(),
            at_ms,
            &customer,
            TxKind::InvoiceSettled,
            &payload,
        )?;
        let seq = tx.seq;
        self.ledger_mut().append(vec![tx])?;
        Ok(seq)
    }

    /// Cases awaiting the given organization's action — a pure ledger query.
    /// A case is pending for whoever must author the next transaction:
    /// ErrorDetected and Finished wait on the provider, Invoiced on the
    /// customer.
    pub fn pending_notifications(&self, org: &str) -> Result<Vec<PendingCase>, MaintenanceError> {
        let book = self.case_book()?;
        let mut pending = Vec::new();
        for case in book.iter() {
            let awaiting = match case.state {
                CaseState::ErrorDetected | CaseState::Finished => Some(&case.provider),
                CaseState::Invoiced => Some(&case.customer),
                _ => None,
            };
            if awaiting.is_some_and(|a| a == org) {
                pending.push(PendingCase {
                    case_id: case.id.clone(),
                    state: case.state,
                    awaiting: org.to_string(),
                });
            }
        }
        Ok(pending)
    }

    fn expect_state(
        &self,
        case_id: &str,
        expected: CaseState,
        op: &'static str,
    ) -> Result<MaintenanceCase, MaintenanceError> {
        let case = self
            .case_book()?
            .get(case_id)
            .cloned()
            .ok_or_else(|| MaintenanceError::UnknownCase(case_id.to_string()))?;
        if case.state != expected {
            return Err(MaintenanceError::IllegalTransition {
                case: case_id.to_string(),
                state: case.state.to_string(),
                op,
            });
        }
        Ok(case)
    }

    fn append_case_tx(
        &mut self,
        author: &str,
        payload: MaintenancePayload,
        at_ms: u64,
    ) -> Result<u64, MaintenanceError> {
        let tx = self.signed_tx(
            self.ledger().next_seq(),
            at_ms,
            author,
            TxKind::MaintenanceEvent,
            &payload,
        )?;
        let seq = tx.seq;
        self.ledger_mut().append(vec![tx])?;
        Ok(seq)
    }
}

fn require_org_role(
    registry: &Registry,
    org: &str,
    role: Role,
) -> Result<(), MaintenanceError> {
    let entry = registry.get(org).ok_or_else(|| {
        MaintenanceError::Identity(crate::error::IdentityError::UnknownIdentity(org.to_string()))
    })?;
    if entry.identity.kind != IdentityKind::Organization || !entry.roles.contains(&role) {
        return Err(MaintenanceError::WrongRole(format!(
            "{org} must be an Organization with the {role} role"
        )));
    }
    Ok(())
}

fn require_actor(
    case: &MaintenanceCase,
    expected: &str,
    actor: &str,
) -> Result<(), MaintenanceError> {
    if actor != expected {
        return Err(MaintenanceError::WrongAuthor {
            case: case.id.clone(),
            expected: expected.to_string(),
            found: actor.to_string(),
        });
    }
    Ok(())
}
