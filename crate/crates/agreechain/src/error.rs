//! Error types for every subsystem, each with a stable machine-readable code.
//!
//! The code strings are part of the CLI contract: domain errors surface as
//! `{"error": "<code>", "detail": "..."}` and never as stack traces.

use thiserror::Error;

/// Canonical-encoding failures.
#[derive(Debug, Error)]
pub enum CanonicalError {
    #[error("non-integer number in canonical content: {0}")]
    NonIntegerNumber(String),
    #[error("serialization failed: {0}")]
    Serialize(String),
}

/// Key-store failures.
#[derive(Debug, Error)]
pub enum KeyStoreError {
    #[error("no key for identity {0}")]
    MissingKey(String),
    #[error("bad seed for identity {id}: {detail}")]
    BadSeed { id: String, detail: String },
    #[error("key store I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Ledger failures (append, load, verify).
#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("ledger I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("decode error at line {line}, byte offset {offset}: {detail}")]
    Decode { line: u64, offset: u64, detail: String },
    #[error("ledger file already exists: {0}")]
    AlreadyExists(String),
    #[error("append batch is empty")]
    EmptyBatch,
    #[error("unknown author {0}")]
    UnknownAuthor(String),
    #[error("bad signature by {0}")]
    BadSignature(String),
    #[error("sensor {0} may not author transactions")]
    SensorAuthor(String),
    #[error("seq discontinuity: expected {expected}, found {found}")]
    SeqDiscontinuity { expected: u64, found: u64 },
    #[error("payload is not canonical JSON: {0}")]
    NonCanonicalPayload(String),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
}

impl LedgerError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Io(_) => "IoError",
            Self::Decode { .. } => "DecodeError",
            Self::AlreadyExists(_) => "LedgerExists",
            Self::EmptyBatch => "EmptyBatch",
            Self::UnknownAuthor(_) => "UnknownAuthor",
            Self::BadSignature(_) => "BadSignature",
            Self::SensorAuthor(_) => "SensorAuthor",
            Self::SeqDiscontinuity { .. } => "SeqDiscontinuity",
            Self::NonCanonicalPayload(_) => "ValidationFailed",
            Self::Canonical(_) => "ValidationFailed",
        }
    }
}

/// Identity registry failures.
#[derive(Debug, Error)]
pub enum IdentityError {
    #[error("identity id {0} already registered")]
    DuplicateId(String),
    #[error("registrar {0} is not registered")]
    UnknownRegistrar(String),
    #[error("registrar {0} is not an organization")]
    RegistrarNotOrganization(String),
    #[error("sensor {id} has no registered gateway ({gateway})")]
    SensorWithoutGateway { id: String, gateway: String },
    #[error("identity {0} is not registered")]
    UnknownIdentity(String),
    #[error("sensor {0} is not registered")]
    UnknownSensor(String),
    #[error("sensor {sensor} is not bound to gateway {gateway}")]
    SensorNotBoundToGateway { sensor: String, gateway: String },
    #[error("{0} is not a gateway")]
    NotAGateway(String),
    #[error("role {role} cannot be attached to {kind} identity {id}")]
    RoleKindMismatch { id: String, kind: String, role: String },
    #[error("identity {0} needs no gateway binding")]
    UnexpectedGateway(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    KeyStore(#[from] KeyStoreError),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
}

impl IdentityError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::DuplicateId(_) => "DuplicateId",
            Self::UnknownRegistrar(_) => "UnknownRegistrar",
            Self::RegistrarNotOrganization(_) => "ValidationFailed",
            Self::SensorWithoutGateway { .. } => "SensorWithoutGateway",
            Self::UnknownIdentity(_) => "UnknownIdentity",
            Self::UnknownSensor(_) => "UnknownSensor",
            Self::SensorNotBoundToGateway { .. } => "SensorNotBoundToGateway",
            Self::NotAGateway(_) => "ValidationFailed",
            Self::RoleKindMismatch { .. } => "ValidationFailed",
            Self::UnexpectedGateway(_) => "ValidationFailed",
            Self::Ledger(e) => e.code(),
            Self::KeyStore(_) => "KeyStoreError",
            Self::Canonical(_) => "ValidationFailed",
        }
    }
}

/// Agreement-engine failures.
#[derive(Debug, Error)]
pub enum AgreementError {
    #[error("missing signature from party {0}")]
    MissingPartySignature(String),
    #[error("signature from party {0} does not verify")]
    BadPartySignature(String),
    #[error("dependency {0} is not deployed")]
    UnknownDependency(String),
    #[error("validation failed: {0}")]
    ValidationFailed(crate::agreements::SpecIssue),
    #[error("agreement {0} already deployed")]
    DuplicateAgreement(String),
    #[error("agreement {id} is not active at {at_ms} ms")]
    InactiveAgreement { id: String, at_ms: u64 },
    #[error("origin {origin} is not authorized for metric {metric}")]
    UnauthorizedOrigin { origin: String, metric: String },
    #[error("agreement {0} is not deployed")]
    UnknownAgreement(String),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    KeyStore(#[from] KeyStoreError),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
}

impl AgreementError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::MissingPartySignature(_) => "MissingPartySignature",
            Self::BadPartySignature(_) => "BadSignature",
            Self::UnknownDependency(_) => "UnknownDependency",
            Self::ValidationFailed(_) => "ValidationFailed",
            Self::DuplicateAgreement(_) => "ValidationFailed",
            Self::InactiveAgreement { .. } => "InactiveAgreement",
            Self::UnauthorizedOrigin { .. } => "UnauthorizedOrigin",
            Self::UnknownAgreement(_) => "UnknownAgreement",
            Self::Identity(e) => e.code(),
            Self::Ledger(e) => e.code(),
            Self::KeyStore(_) => "KeyStoreError",
            Self::Canonical(_) => "ValidationFailed",
        }
    }
}

/// Data-governance failures.
#[derive(Debug, Error)]
pub enum GovernanceError {
    #[error("policy {0} is not deployed")]
    UnknownPolicy(String),
    #[error("policy {0} is inactive")]
    InactivePolicy(String),
    #[error("validation failed: {0}")]
    ValidationFailed(String),
    #[error("policy {0} already deployed")]
    DuplicatePolicy(String),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    KeyStore(#[from] KeyStoreError),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
}

impl GovernanceError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::UnknownPolicy(_) => "UnknownPolicy",
            Self::InactivePolicy(_) => "InactivePolicy",
            Self::ValidationFailed(_) => "ValidationFailed",
            Self::DuplicatePolicy(_) => "ValidationFailed",
            Self::Identity(e) => e.code(),
            Self::Ledger(e) => e.code(),
            Self::KeyStore(_) => "KeyStoreError",
            Self::Canonical(_) => "ValidationFailed",
        }
    }
}

/// Maintenance-case failures.
#[derive(Debug, Error)]
pub enum MaintenanceError {
    #[error("case {case}: {op} is illegal in state {state}")]
    IllegalTransition { case: String, state: String, op: &'static str },
    #[error("case {case}: expected author {expected}, got {found}")]
    WrongAuthor { case: String, expected: String, found: String },
    #[error("{0}")]
    WrongRole(String),
    #[error("case {0} does not exist")]
    UnknownCase(String),
    #[error("invoice for case {0} already settled")]
    DoubleSettlement(String),
    #[error("validation failed: {0}")]
    ValidationFailed(String),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    KeyStore(#[from] KeyStoreError),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
}

impl MaintenanceError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::IllegalTransition { .. } => "IllegalTransition",
            Self::WrongAuthor { .. } => "WrongAuthor",
            Self::WrongRole(_) => "WrongRole",
            Self::UnknownCase(_) => "UnknownCase",
            Self::DoubleSettlement(_) => "DoubleSettlement",
            Self::ValidationFailed(_) => "ValidationFailed",
            Self::Identity(e) => e.code(),
            Self::Ledger(e) => e.code(),
            Self::KeyStore(_) => "KeyStoreError",
            Self::Canonical(_) => "ValidationFailed",
        }
    }
}

/// Simulator failures.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown workflow {0}")]
    UnknownWorkflow(String),
    #[error("probability {value} for {scope} is outside [0, 1]")]
    InvalidProbability { scope: String, value: f64 },
    #[error("probability override names unknown mode {0}")]
    UnknownMode(String),
    #[error("trials must be at least 1")]
    ZeroTrials,
    #[error("reports have different trial counts: {a} vs {b}")]
    MismatchedTrials { a: u64, b: u64 },
    #[error("workflow data invalid: {0}")]
    BadModel(String),
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::UnknownWorkflow(_) => "UnknownWorkflow",
            Self::InvalidProbability { .. } => "InvalidProbability",
            Self::UnknownMode(_) => "InvalidProbability",
            Self::ZeroTrials => "ZeroTrials",
            Self::MismatchedTrials { .. } => "MismatchedTrials",
            Self::BadModel(_) => "ValidationFailed",
        }
    }
}
