//! Registry and cryptographic identity for parties and devices.
//!
//! Persons, organizations, machines and gateways hold Ed25519 keys and may
//! author transactions. Sensors hold no effective key: every reading reaches
//! the ledger through the sensor's registered gateway, which signs on its
//! behalf. Registration is itself a ledger transaction, so the registry is a
//! pure view derived from the chain.

use std::collections::{BTreeMap, BTreeSet};

use ed25519_dalek::VerifyingKey;
use serde::{Deserialize, Serialize};

use crate::agreements::MetricPayload;
use crate::crypto;
use crate::error::IdentityError;
use crate::ledger::{Ledger, Transaction, TxKind};
use crate::node::Node;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IdentityKind {
    Person,
    Organization,
    Machine,
    Sensor,
    Gateway,
}

impl IdentityKind {
    pub const fn as_str(self) -> &'static str {
        match self {
            Self::Person => "Person",
            Self::Organization => "Organization",
            Self::Machine => "Machine",
            Self::Sensor => "Sensor",
            Self::Gateway => "Gateway",
        }
    }
}

impl std::fmt::Display for IdentityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Stakeholder roles. Person roles describe who handles the machine;
/// organization roles describe the business relationship.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Engineer,
    Technician,
    Operator,
    Manufacturer,
    SparePartSupplier,
    MaintenanceProvider,
    Customer,
}

impl Role {
    pub const fn as_str(self) -> &'static str {
        match self {
            Self::Engineer => "Engineer",
            Self::Technician => "Technician",
            Self::Operator => "Operator",
            Self::Manufacturer => "Manufacturer",
            Self::SparePartSupplier => "SparePartSupplier",
            Self::MaintenanceProvider => "MaintenanceProvider",
            Self::Customer => "Customer",
        }
    }

    /// Person roles attach only to persons, organization roles only to
    /// organizations.
    pub const fn allowed_on(self, kind: IdentityKind) -> bool {
        match self {
            Self::Engineer | Self::Technician | Self::Operator => {
                matches!(kind, IdentityKind::Person)
            }
            Self::Manufacturer
            | Self::SparePartSupplier
            | Self::MaintenanceProvider
            | Self::Customer => matches!(kind, IdentityKind::Organization),
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A registered participant or device.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Identity {
    pub id: String,
    pub kind: IdentityKind,
    pub display_name: String,
    pub verification_key: [u8; crypto::KEY_LEN],
    pub registered_by: String,
    /// Required for sensors: the gateway that signs on the sensor's behalf.
    pub gateway_id: Option<String>,
}

/// IdentityRegistered payload document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityRecord {
    pub id: String,
    pub kind: IdentityKind,
    pub display_name: String,
    pub verification_key_hex: String,
    pub registered_by: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gateway_id: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub roles: BTreeSet<Role>,
}

impl IdentityRecord {
    pub fn from_identity(identity: &Identity, roles: &BTreeSet<Role>) -> Self {
        Self {
            id: identity.id.clone(),
            kind: identity.kind,
            display_name: identity.display_name.clone(),
            verification_key_hex: crypto::to_hex(&identity.verification_key),
            registered_by: identity.registered_by.clone(),
            gateway_id: identity.gateway_id.clone(),
            roles: roles.clone(),
        }
    }

    pub fn verifying_key(&self) -> Option<VerifyingKey> {
        let bytes = crypto::from_hex_exact::<{ crypto::KEY_LEN }>(&self.verification_key_hex)?;
        crypto::verifying_key_from_bytes(&bytes)
    }

    pub fn to_identity(&self) -> Option<Identity> {
        Some(Identity {
            id: self.id.clone(),
            kind: self.kind,
            display_name: self.display_name.clone(),
            verification_key: crypto::from_hex_exact::<{ crypto::KEY_LEN }>(
                &self.verification_key_hex,
            )?,
            registered_by: self.registered_by.clone(),
            gateway_id: self.gateway_id.clone(),
        })
    }
}

// ---------------------------------------------------------------------------
// Registry view
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RegisteredIdentity {
    pub identity: Identity,
    pub roles: BTreeSet<Role>,
    /// Seq of the IdentityRegistered transaction.
    pub seq: u64,
}

/// Identity view derived from the ledger's IdentityRegistered transactions.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    entries: BTreeMap<String, RegisteredIdentity>,
}

/// Result of checking a transaction's authorship.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuthorVerdict {
    Ok,
    UnknownAuthor,
    BadSignature,
}

impl Registry {
    pub fn from_ledger(ledger: &Ledger) -> Result<Self, IdentityError> {
        let mut entries = BTreeMap::new();
        for tx in ledger.iter_txs().filter(|tx| tx.kind == TxKind::IdentityRegistered) {
            let record: IdentityRecord =
                serde_json::from_slice(&tx.payload).map_err(|e| {
                    IdentityError::Ledger(crate::error::LedgerError::NonCanonicalPayload(
                        e.to_string(),
                    ))
                })?;
            let identity = record.to_identity().ok_or_else(|| {
                IdentityError::Ledger(crate::error::LedgerError::NonCanonicalPayload(format!(
                    "bad verification key for {}",
                    record.id
                )))
            })?;
            entries.insert(
                record.id.clone(),
                RegisteredIdentity { identity, roles: record.roles, seq: tx.seq },
            );
        }
        Ok(Self { entries })
    }

    pub fn get(&self, id: &str) -> Option<&RegisteredIdentity> {
        self.entries.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn kind(&self, id: &str) -> Option<IdentityKind> {
        self.entries.get(id).map(|e| e.identity.kind)
    }

    pub fn has_role(&self, id: &str, role: Role) -> bool {
        self.entries.get(id).is_some_and(|e| e.roles.contains(&role))
    }

    pub fn iter(&self) -> impl Iterator<Item = &RegisteredIdentity> {
        self.entries.values()
    }

    /// Ok iff the author exists and the signature verifies against the
    /// author's registered key.
    pub fn verify_author(&self, tx: &Transaction) -> AuthorVerdict {
        let Some(entry) = self.entries.get(&tx.author) else {
            return AuthorVerdict::UnknownAuthor;
        };
        let Some(key) = crypto::verifying_key_from_bytes(&entry.identity.verification_key) else {
            return AuthorVerdict::BadSignature;
        };
        if crypto::verify_digest(&key, &tx.digest(), &tx.signature) {
            AuthorVerdict::Ok
        } else {
            AuthorVerdict::BadSignature
        }
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

impl Node {
    /// Register an identity. The registrar is `identity.registered_by`, which
    /// signs the IdentityRegistered transaction.
    pub fn register_identity(
        &mut self,
        identity: &Identity,
        roles: &BTreeSet<Role>,
        at_ms: u64,
    ) -> Result<u64, IdentityError> {
        let registry = self.registry()?;
        if registry.contains(&identity.id) {
            return Err(IdentityError::DuplicateId(identity.id.clone()));
        }
        let registrar = registry
            .get(&identity.registered_by)
            .ok_or_else(|| IdentityError::UnknownRegistrar(identity.registered_by.clone()))?;
        if registrar.identity.kind != IdentityKind::Organization {
            return Err(IdentityError::RegistrarNotOrganization(identity.registered_by.clone()));
        }
        for role in roles {
            if !role.allowed_on(identity.kind) {
                return Err(IdentityError::RoleKindMismatch {
                    id: identity.id.clone(),
                    kind: identity.kind.as_str().to_string(),
                    role: role.as_str().to_string(),
                });
            }
        }
        match (identity.kind, &identity.gateway_id) {
            (IdentityKind::Sensor, gateway) => {
                let gateway = gateway.clone().unwrap_or_default();
                let bound = registry
                    .get(&gateway)
                    .is_some_and(|g| g.identity.kind == IdentityKind::Gateway);
                if !bound {
                    return Err(IdentityError::SensorWithoutGateway {
                        id: identity.id.clone(),
                        gateway,
                    });
                }
            }
            (_, Some(_)) => return Err(IdentityError::UnexpectedGateway(identity.id.clone())),
            (_, None) => {}
        }

        let record = IdentityRecord::from_identity(identity, roles);
        let tx = self.signed_tx(
            self.ledger().next_seq(),
            at_ms,
            &identity.registered_by,
            TxKind::IdentityRegistered,
            &record,
        )?;
        let seq = tx.seq;
        self.ledger_mut().append(vec![tx])?;
        Ok(seq)
    }

    /// Build a MetricRecorded transaction for a sensor reading, authored and
    /// signed by the sensor's gateway. The transaction is returned, not
    /// appended; its payload names the sensor as data origin.
    pub fn gateway_submit(
        &self,
        gateway: &str,
        sensor: &str,
        reading: &GatewayReading,
        at_ms: u64,
    ) -> Result<Transaction, IdentityError> {
        let registry = self.registry()?;
        let gw = registry
            .get(gateway)
            .ok_or_else(|| IdentityError::UnknownIdentity(gateway.to_string()))?;
        if gw.identity.kind != IdentityKind::Gateway {
            return Err(IdentityError::NotAGateway(gateway.to_string()));
        }
        let sensor_entry = registry
            .get(sensor)
            .filter(|e| e.identity.kind == IdentityKind::Sensor)
            .ok_or_else(|| IdentityError::UnknownSensor(sensor.to_string()))?;
        if sensor_entry.identity.gateway_id.as_deref() != Some(gateway) {
            return Err(IdentityError::SensorNotBoundToGateway {
                sensor: sensor.to_string(),
                gateway: gateway.to_string(),
            });
        }
        let payload = MetricPayload {
            agreement_id: reading.agreement_id.clone(),
            metric: reading.metric.clone(),
            value: reading.value,
            origin: sensor.to_string(),
        };
        self.signed_tx(
            self.ledger().next_seq(),
            at_ms,
            gateway,
            TxKind::MetricRecorded,
            &payload,
        )
    }
}

/// A sensor reading as handed to a gateway.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GatewayReading {
    pub agreement_id: String,
    pub metric: String,
    /// Scaled integer value (see the owning metric's scale_exponent).
    pub value: i64,
}

/// Helper for constructing identities with the key taken from a key store.
pub fn identity_with_key(
    keys: &crate::keystore::KeyStore,
    id: &str,
    kind: IdentityKind,
    display_name: &str,
    registered_by: &str,
    gateway_id: Option<String>,
) -> Result<Identity, IdentityError> {
    let vk = keys.signing_key(id)?.verifying_key();
    Ok(Identity {
        id: id.to_string(),
        kind,
        display_name: display_name.to_string(),
        verification_key: vk.to_bytes(),
        registered_by: registered_by.to_string(),
        gateway_id,
    })
}
