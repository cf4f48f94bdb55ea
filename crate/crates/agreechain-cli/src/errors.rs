//! Error-to-exit-code mapping.
//!
//! Exit 0: success. Exit 1: validation or domain error. Exit 2: I/O, decode,
//! or usage error. Every failure prints a single JSON object
//! `{"error": CODE, "detail": TEXT}` — no stack traces.

use agreechain::{
    AgreementError, GovernanceError, IdentityError, KeyStoreError, LedgerError, MaintenanceError,
    SimError,
};

pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_IO: i32 = 2;

pub struct CliError {
    pub code: String,
    pub detail: String,
    pub exit: i32,
}

impl CliError {
    pub fn new(code: &str, detail: impl ToString, exit: i32) -> Self {
        Self { code: code.to_string(), detail: detail.to_string(), exit }
    }

    pub fn io(detail: impl ToString) -> Self {
        Self::new("IoError", detail, EXIT_IO)
    }

    pub fn decode(detail: impl ToString) -> Self {
        Self::new("DecodeError", detail, EXIT_IO)
    }

    pub fn report(&self) -> i32 {
        let body = serde_json::json!({ "error": self.code, "detail": self.detail });
        eprintln!("{body}");
        self.exit
    }
}

fn ledger_exit(err: &LedgerError) -> i32 {
    match err {
        LedgerError::Io(_) | LedgerError::Decode { .. } | LedgerError::AlreadyExists(_) => EXIT_IO,
        _ => EXIT_DOMAIN,
    }
}

impl From<LedgerError> for CliError {
    fn from(err: LedgerError) -> Self {
        Self::new(err.code(), &err, ledger_exit(&err))
    }
}

impl From<KeyStoreError> for CliError {
    fn from(err: KeyStoreError) -> Self {
        Self::new("KeyStoreError", &err, EXIT_IO)
    }
}

impl From<IdentityError> for CliError {
    fn from(err: IdentityError) -> Self {
        let exit = match &err {
            IdentityError::Ledger(e) => ledger_exit(e),
            IdentityError::KeyStore(_) => EXIT_IO,
            _ => EXIT_DOMAIN,
        };
        Self::new(err.code(), &err, exit)
    }
}

impl From<AgreementError> for CliError {
    fn from(err: AgreementError) -> Self {
        let exit = match &err {
            AgreementError::Ledger(e) => ledger_exit(e),
            AgreementError::KeyStore(_) => EXIT_IO,
            AgreementError::Identity(IdentityError::KeyStore(_)) => EXIT_IO,
            _ => EXIT_DOMAIN,
        };
        Self::new(err.code(), &err, exit)
    }
}

impl From<GovernanceError> for CliError {
    fn from(err: GovernanceError) -> Self {
        let exit = match &err {
            GovernanceError::Ledger(e) => ledger_exit(e),
            GovernanceError::KeyStore(_) => EXIT_IO,
            GovernanceError::Identity(IdentityError::KeyStore(_)) => EXIT_IO,
            _ => EXIT_DOMAIN,
        };
        Self::new(err.code(), &err, exit)
    }
}

impl From<MaintenanceError> for CliError {
    fn from(err: MaintenanceError) -> Self {
        let exit = match &err {
            MaintenanceError::Ledger(e) => ledger_exit(e),
            MaintenanceError::KeyStore(_) => EXIT_IO,
            MaintenanceError::Identity(IdentityError::KeyStore(_)) => EXIT_IO,
            _ => EXIT_DOMAIN,
        };
        Self::new(err.code(), &err, exit)
    }
}

impl From<SimError> for CliError {
    fn from(err: SimError) -> Self {
        Self::new(err.code(), &err, EXIT_DOMAIN)
    }
}
