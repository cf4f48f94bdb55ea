//! Shared fixtures for integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use agreechain::canonical;
use agreechain::crypto;
use agreechain::identity::{identity_with_key, IdentityKind, IdentityRecord, Role};
use agreechain::maintenance::MaintenanceType;
use agreechain::{KeyStore, Node, Transaction, TxKind};
use tempfile::TempDir;

pub const T0: u64 = 1_000;

/// A node with only the bootstrap root ("root", seed [1; 32]).
pub fn new_node(dir: &TempDir) -> Node {
    new_node_at(dir, "ledger.jsonl")
}

pub fn new_node_at(dir: &TempDir, file: &str) -> Node {
    let mut keys = KeyStore::in_memory();
    keys.put("root", [1u8; 32]).unwrap();
    Node::create(dir.path().join(file), keys, "root", "Root Org", T0).unwrap()
}

/// Register an identity under the root, with a deterministic per-identity key.
pub fn register(
    node: &mut Node,
    id: &str,
    kind: IdentityKind,
    roles: &[Role],
    gateway: Option<&str>,
    seed_byte: u8,
    at: u64,
) -> u64 {
    node.keys_mut().put(id, [seed_byte; 32]).unwrap();
    let identity = identity_with_key(
        node.keys(),
        id,
        kind,
        id,
        "root",
        gateway.map(String::from),
    )
    .unwrap();
    let roles: BTreeSet<Role> = roles.iter().copied().collect();
    node.register_identity(&identity, &roles, at).unwrap()
}

/// Root plus the standard cast: two organizations, a machine, a gateway, a
/// bound sensor, and a technician.
pub fn standard_fixture(dir: &TempDir) -> Node {
    let mut node = new_node(dir);
    register(&mut node, "company_z", IdentityKind::Organization, &[Role::Customer], None, 2, 1_001);
    register(
        &mut node,
        "company_x",
        IdentityKind::Organization,
        &[Role::MaintenanceProvider],
        None,
        3,
        1_002,
    );
    register(&mut node, "m_x", IdentityKind::Machine, &[], None, 4, 1_003);
    register(&mut node, "gw_7", IdentityKind::Gateway, &[], None, 5, 1_004);
    register(&mut node, "temp_01", IdentityKind::Sensor, &[], Some("gw_7"), 6, 1_005);
    register(&mut node, "tech_1", IdentityKind::Person, &[Role::Technician], None, 7, 1_006);
    node
}

/// Drive one case through the whole Deployed -> Settled path.
pub fn run_happy_path(node: &mut Node, case_id: &str, at: u64) {
    node.deploy_case(case_id, "company_z", "company_x", "m_x", MaintenanceType::Corrective, at)
        .unwrap();
    node.detect_error(case_id, 77, "m_x", at + 1).unwrap();
    node.accept_order(case_id, "company_x", at + 2).unwrap();
    node.set_maintenance_mode(case_id, "tech_1", "m_x", at + 3).unwrap();
    node.record_fix(case_id, "serial-4711").unwrap();
    node.finish_maintenance(case_id, "m_x", at + 4).unwrap();
    node.issue_invoice(case_id, &format!("i_{case_id}"), 25_000, "company_x", at + 5).unwrap();
    node.settle_invoice(case_id, "company_z", at + 6).unwrap();
}

/// Drive a fresh case from deployment into a target state.
pub fn case_in_state(
    node: &mut Node,
    case_id: &str,
    target: agreechain::maintenance::CaseState,
    at: u64,
) {
    use agreechain::maintenance::CaseState;
    node.deploy_case(case_id, "company_z", "company_x", "m_x", MaintenanceType::Corrective, at)
        .unwrap();
    if target == CaseState::Deployed {
        return;
    }
    type Step<'a> = &'a dyn Fn(&mut Node) -> u64;
    let invoice_id = format!("i_{case_id}");
    let steps: [(Step, CaseState); 7] = [
        (&|n| n.detect_error(case_id, 77, "m_x", at + 1).unwrap(), CaseState::ErrorDetected),
        (&|n| n.accept_order(case_id, "company_x", at + 2).unwrap(), CaseState::OrderAccepted),
        (
            &|n| n.set_maintenance_mode(case_id, "tech_1", "m_x", at + 3).unwrap(),
            CaseState::InMaintenance,
        ),
        (
            &|n| {
                n.record_fix(case_id, "serial-1").unwrap();
                0
            },
            CaseState::Fixed,
        ),
        (&|n| n.finish_maintenance(case_id, "m_x", at + 4).unwrap(), CaseState::Finished),
        (
            &|n| n.issue_invoice(case_id, &invoice_id, 100, "company_x", at + 5).unwrap(),
            CaseState::Invoiced,
        ),
        (&|n| n.settle_invoice(case_id, "company_z", at + 6).unwrap(), CaseState::Settled),
    ];
    for (step, reached) in steps {
        step(node);
        if reached == target {
            return;
        }
    }
}

/// A self-signed bootstrap registration transaction for raw-ledger tests.
pub fn root_tx(seed: [u8; 32], id: &str, seq: u64, at: u64) -> Transaction {
    let key = crypto::signing_key_from_seed(&seed);
    let record = IdentityRecord {
        id: id.to_string(),
        kind: IdentityKind::Organization,
        display_name: id.to_string(),
        verification_key_hex: crypto::to_hex(&key.verifying_key().to_bytes()),
        registered_by: id.to_string(),
        gateway_id: None,
        roles: BTreeSet::new(),
    };
    signed_tx(seed, id, seq, at, TxKind::IdentityRegistered, &serde_json::to_value(record).unwrap())
}

/// Build a signed transaction with an arbitrary payload document.
pub fn signed_tx(
    seed: [u8; 32],
    author: &str,
    seq: u64,
    at: u64,
    kind: TxKind,
    payload: &serde_json::Value,
) -> Transaction {
    let key = crypto::signing_key_from_seed(&seed);
    let payload = canonical::to_canonical_string(payload).unwrap().into_bytes();
    let mut tx = Transaction {
        seq,
        timestamp_ms: at,
        author: author.to_string(),
        kind,
        payload,
        signature: [0u8; 64],
    };
    tx.signature = crypto::sign_digest(&key, &tx.digest());
    tx
}
