//! Command-line entry point for the agreechain ledger and agreement engine.
//!
//! Mutating commands take `--at <ms>` (logical milliseconds) so that runs are
//! replayable; `--now` opts into the wall clock explicitly. Write commands
//! serialize through an exclusive lock on the ledger file; read commands may
//! run concurrently against the same ledger.

mod errors;
mod output;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use agreechain::agreements::{
    spec_digest, validate_bundle, AgreementBook, AgreementSpec, MetricSample, PartySignature,
};
use agreechain::governance::{FilterOutcome, GovernancePolicy, SharePayload};
use agreechain::identity::{identity_with_key, IdentityKind, Role};
use agreechain::maintenance::MaintenanceType;
use agreechain::simulator::{
    self, report_csv, ProbabilityOverride, SimulationConfig, SimulationReport, WorkflowName,
};
use agreechain::{ChainStatus, KeyStore, Node, TxFilter, TxKind};
use clap::{Args, Parser, Subcommand};

use errors::{CliError, EXIT_DOMAIN};
use output::{emit, emit_ok, Format};

#[derive(Parser)]
#[command(name = "agreechain", version, about = "Cross-company agreements on a tamper-evident ledger")]
struct Cli {
    /// Ledger file path.
    #[arg(long, global = true, env = "AGREECHAIN_LEDGER", default_value = "ledger.jsonl")]
    ledger: PathBuf,

    /// Directory of per-identity key files (<id>.key, 32-byte hex seed).
    #[arg(long, global = true, default_value = "keys")]
    key_dir: PathBuf,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct At {
    /// Logical timestamp in milliseconds.
    #[arg(long, conflicts_with = "now")]
    at: Option<u64>,

    /// Use the wall clock instead of --at.
    #[arg(long)]
    now: bool,
}

impl At {
    fn resolve(&self) -> Result<u64, CliError> {
        match (self.at, self.now) {
            (Some(ms), false) => Ok(ms),
            (None, true) => Ok(std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_err(CliError::io)?
                .as_millis() as u64),
            _ => Err(CliError::new(
                "ValidationFailed",
                "a timestamp is required: pass --at <ms> or --now",
                EXIT_DOMAIN,
            )),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Create a ledger and register the bootstrap root organization.
    Init {
        #[arg(long)]
        root_id: String,
        #[arg(long)]
        root_name: Option<String>,
        /// Root key seed (64 hex chars); generated randomly when omitted.
        #[arg(long)]
        seed_hex: Option<String>,
        #[command(flatten)]
        at: At,
    },
    /// Identity registry operations.
    Identity {
        #[command(subcommand)]
        command: IdentityCommand,
    },
    /// Agreement deployment and signing.
    Agreement {
        #[command(subcommand)]
        command: AgreementCommand,
    },
    /// Record a metric sample against a deployed agreement.
    Metric {
        #[command(subcommand)]
        command: MetricCommand,
    },
    /// Data-governance policies.
    Policy {
        #[command(subcommand)]
        command: PolicyCommand,
    },
    /// Apply a policy to a payload before sharing it.
    Share {
        #[command(subcommand)]
        command: ShareCommand,
    },
    /// Maintenance-case protocol.
    Maint {
        #[command(subcommand)]
        command: MaintCommand,
    },
    /// Ledger verification and queries.
    Ledger {
        #[command(subcommand)]
        command: LedgerCommand,
    },
    /// Workflow simulation.
    Sim {
        #[command(subcommand)]
        command: SimCommand,
    },
    /// Compliance report for an agreement.
    Report {
        #[arg(long)]
        agreement: String,
        #[arg(long)]
        from_seq: Option<u64>,
        #[arg(long)]
        to_seq: Option<u64>,
    },
}

#[derive(Subcommand)]
enum IdentityCommand {
    /// Register an identity; the registrar signs the transaction.
    Register {
        #[arg(long)]
        id: String,
        #[arg(long, value_parser = parse_kind)]
        kind: IdentityKind,
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value = "root")]
        registered_by: String,
        /// Gateway id (sensors only).
        #[arg(long)]
        gateway: Option<String>,
        /// Role tags (repeatable).
        #[arg(long = "role", value_parser = parse_role)]
        roles: Vec<Role>,
        /// Key seed (64 hex chars); generated randomly when omitted.
        #[arg(long)]
        seed_hex: Option<String>,
        #[command(flatten)]
        at: At,
    },
    /// List registered identities.
    List,
    /// Show one identity.
    Show {
        #[arg(long)]
        id: String,
    },
}

#[derive(Subcommand)]
enum AgreementCommand {
    /// Validate one or more agreement spec files (cross-file dependencies
    /// allowed) and print each canonical digest.
    Validate {
        #[arg(long = "spec", required = true)]
        specs: Vec<PathBuf>,
    },
    /// Sign a spec's canonical digest with a party's key.
    Sign {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        party: String,
    },
    /// Deploy a spec carrying every party's signature (party=hex128).
    Deploy {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long = "sig", value_parser = parse_sig)]
        sigs: Vec<PartySignature>,
        #[command(flatten)]
        at: At,
    },
}

#[derive(Subcommand)]
enum MetricCommand {
    Record {
        #[arg(long)]
        agreement: String,
        #[arg(long)]
        metric: String,
        /// Scaled integer value.
        #[arg(long)]
        value: i64,
        /// Sensor or machine the value came from.
        #[arg(long)]
        origin: String,
        #[command(flatten)]
        at: At,
    },
}

#[derive(Subcommand)]
enum PolicyCommand {
    /// Deploy a policy from a JSON file, signed by its from_org.
    Deploy {
        #[arg(long)]
        policy: PathBuf,
        #[command(flatten)]
        at: At,
    },
    List,
}

#[derive(Subcommand)]
enum ShareCommand {
    /// Filter a payload file through a policy.
    Filter {
        #[arg(long)]
        policy: String,
        #[arg(long)]
        payload: PathBuf,
        #[command(flatten)]
        at: At,
    },
}

#[derive(Subcommand)]
enum MaintCommand {
    Deploy {
        #[arg(long)]
        case: String,
        #[arg(long)]
        customer: String,
        #[arg(long)]
        provider: String,
        #[arg(long)]
        machine: String,
        #[arg(long = "type", value_parser = parse_maintenance_type, default_value = "corrective")]
        maintenance_type: MaintenanceType,
        #[command(flatten)]
        at: At,
    },
    Detect {
        #[arg(long)]
        case: String,
        #[arg(long)]
        code: u32,
        /// Defaults to the case's machine.
        #[arg(long)]
        actor: Option<String>,
        #[command(flatten)]
        at: At,
    },
    Accept {
        #[arg(long)]
        case: String,
        /// Defaults to the case's provider.
        #[arg(long)]
        actor: Option<String>,
        #[command(flatten)]
        at: At,
    },
    Mode {
        #[arg(long)]
        case: String,
        #[arg(long)]
        technician: String,
        /// Defaults to the case's machine.
        #[arg(long)]
        actor: Option<String>,
        #[command(flatten)]
        at: At,
    },
    Fix {
        #[arg(long)]
        case: String,
        /// Proof token (serial number, scan digest).
        #[arg(long)]
        proof: String,
    },
    Finish {
        #[arg(long)]
        case: String,
        #[arg(long)]
        actor: Option<String>,
        #[command(flatten)]
        at: At,
    },
    Invoice {
        #[arg(long)]
        case: String,
        #[arg(long)]
        invoice_id: String,
        /// Scaled integer currency amount.
        #[arg(long)]
        amount: i64,
        #[arg(long)]
        actor: Option<String>,
        #[command(flatten)]
        at: At,
    },
    Settle {
        #[arg(long)]
        case: String,
        #[arg(long)]
        actor: Option<String>,
        #[command(flatten)]
        at: At,
    },
    /// Show one case as JSON.
    Show {
        #[arg(long)]
        case: String,
    },
    /// Cases awaiting an organization's action.
    Pending {
        #[arg(long)]
        org: String,
    },
}

#[derive(Subcommand)]
enum LedgerCommand {
    /// Verify hash links, signatures and seq continuity of the whole chain.
    Verify,
    /// List transactions matching the filters.
    Query {
        #[arg(long, value_parser = parse_tx_kind)]
        kind: Option<TxKind>,
        #[arg(long)]
        author: Option<String>,
        #[arg(long)]
        from_seq: Option<u64>,
        #[arg(long)]
        to_seq: Option<u64>,
    },
}

#[derive(Subcommand)]
enum SimCommand {
    /// Run a Monte Carlo failure-injection simulation.
    Run {
        #[arg(long, value_parser = parse_workflow)]
        workflow: WorkflowName,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        /// Uniform probability for every failure mode.
        #[arg(long, conflicts_with = "prob_file")]
        prob: Option<f64>,
        /// JSON file with per-mode probabilities {"mode_id": p, ...}.
        #[arg(long)]
        prob_file: Option<PathBuf>,
        /// Also write the JSON report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two report files (same trial count).
    Compare {
        report_a: PathBuf,
        report_b: PathBuf,
    },
    /// Enumerate a workflow's failure sources.
    Sources {
        #[arg(long, value_parser = parse_workflow)]
        workflow: WorkflowName,
    },
}

// ---------------------------------------------------------------------------
// Value parsers
// ---------------------------------------------------------------------------

fn parse_kind(s: &str) -> Result<IdentityKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "person" => Ok(IdentityKind::Person),
        "organization" | "org" => Ok(IdentityKind::Organization),
        "machine" => Ok(IdentityKind::Machine),
        "sensor" => Ok(IdentityKind::Sensor),
        "gateway" => Ok(IdentityKind::Gateway),
        other => Err(format!("unknown identity kind {other}")),
    }
}

fn parse_role(s: &str) -> Result<Role, String> {
    match s.to_ascii_lowercase().as_str() {
        "engineer" => Ok(Role::Engineer),
        "technician" => Ok(Role::Technician),
        "operator" => Ok(Role::Operator),
        "manufacturer" => Ok(Role::Manufacturer),
        "sparepartsupplier" | "spare-part-supplier" => Ok(Role::SparePartSupplier),
        "maintenanceprovider" | "maintenance-provider" => Ok(Role::MaintenanceProvider),
        "customer" => Ok(Role::Customer),
        other => Err(format!("unknown role {other}")),
    }
}

fn parse_maintenance_type(s: &str) -> Result<MaintenanceType, String> {
    match s.to_ascii_lowercase().as_str() {
        "preventive" => Ok(MaintenanceType::Preventive),
        "corrective" => Ok(MaintenanceType::Corrective),
        "improvement" => Ok(MaintenanceType::Improvement),
        other => Err(format!("unknown maintenance type {other}")),
    }
}

fn parse_workflow(s: &str) -> Result<WorkflowName, String> {
    s.parse().map_err(|e: agreechain::SimError| e.to_string())
}

fn parse_tx_kind(s: &str) -> Result<TxKind, String> {
    s.parse()
}

fn parse_sig(s: &str) -> Result<PartySignature, String> {
    let (party, hex) = s
        .split_once('=')
        .ok_or_else(|| "expected party=hex_signature".to_string())?;
    if hex.len() != 128 {
        return Err("signature must be 128 hex chars".to_string());
    }
    Ok(PartySignature { party: party.to_string(), signature_hex: hex.to_string() })
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::decode(format!("{}: {e}", path.display())))
}

fn parse_seed(seed_hex: Option<&str>) -> Result<[u8; 32], CliError> {
    match seed_hex {
        Some(hex) => agreechain::crypto::from_hex_exact::<32>(hex)
            .ok_or_else(|| CliError::decode("seed must be 64 lowercase hex chars")),
        None => {
            let mut seed = [0u8; 32];
            rand::Rng::fill(&mut rand::thread_rng(), &mut seed[..]);
            Ok(seed)
        }
    }
}

fn open_node(cli: &Cli) -> Result<Node, CliError> {
    let keys = KeyStore::open_dir(&cli.key_dir);
    let mut node = Node::open(&cli.ledger, keys)?;
    node.set_fix_overlay(load_overlay(&cli.ledger)?);
    Ok(node)
}

/// Off-ledger fix proofs live next to the ledger so fix/finish work across
/// separate CLI invocations.
fn overlay_path(ledger: &Path) -> PathBuf {
    let mut name = ledger.file_name().unwrap_or_default().to_os_string();
    name.push(".cases.json");
    ledger.with_file_name(name)
}

fn load_overlay(ledger: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let path = overlay_path(ledger);
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    read_json(&path)
}

fn save_overlay(ledger: &Path, node: &Node) -> Result<(), CliError> {
    let path = overlay_path(ledger);
    let body = serde_json::to_string_pretty(node.fix_overlay()).expect("overlay serializes");
    std::fs::write(&path, body).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn tx_summary(tx: &agreechain::Transaction) -> serde_json::Value {
    serde_json::json!({
        "seq": tx.seq,
        "timestamp_ms": tx.timestamp_ms,
        "author": tx.author,
        "kind": tx.kind.as_str(),
        "payload": tx.payload_value().unwrap_or(serde_json::Value::Null),
    })
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => {}
        Err(err) => std::process::exit(err.report()),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Init { root_id, root_name, seed_hex, at } => {
            let at = at.resolve()?;
            let mut keys = KeyStore::open_dir(&cli.key_dir);
            if !keys.contains(root_id) || seed_hex.is_some() {
                keys.put(root_id, parse_seed(seed_hex.as_deref())?)?;
            }
            let name = root_name.clone().unwrap_or_else(|| root_id.clone());
            let node = Node::create(&cli.ledger, keys, root_id, &name, at)?;
            emit_ok(
                cli.format,
                &[
                    ("root", serde_json::Value::from(root_id.clone())),
                    ("ledger", serde_json::Value::from(node.ledger().path().display().to_string())),
                ],
            );
            Ok(())
        }

        Command::Identity { command } => identity_cmd(cli, command),
        Command::Agreement { command } => agreement_cmd(cli, command),
        Command::Metric { command } => metric_cmd(cli, command),
        Command::Policy { command } => policy_cmd(cli, command),
        Command::Share { command } => share_cmd(cli, command),
        Command::Maint { command } => maint_cmd(cli, command),
        Command::Ledger { command } => ledger_cmd(cli, command),
        Command::Sim { command } => sim_cmd(cli, command),

        Command::Report { agreement, from_seq, to_seq } => {
            let node = open_node(cli)?;
            let range = match (from_seq, to_seq) {
                (None, None) => None,
                (lo, hi) => Some((lo.unwrap_or(0), hi.unwrap_or(u64::MAX))),
            };
            let report = node.compliance_report(agreement, range)?;
            if cli.format == Format::Csv {
                println!("agreement_id,sample_count,breach_count,violation_count,uptime_ratio");
                println!(
                    "{},{},{},{},{}",
                    report.agreement_id,
                    report.sample_count,
                    report.breach_count,
                    report.violation_count,
                    report.uptime_ratio
                );
            } else {
                emit(cli.format, &report);
            }
            Ok(())
        }
    }
}

fn identity_cmd(cli: &Cli, command: &IdentityCommand) -> Result<(), CliError> {
    match command {
        IdentityCommand::Register { id, kind, name, registered_by, gateway, roles, seed_hex, at } => {
            let at = at.resolve()?;
            let mut node = open_node(cli)?;
            if !node.keys().contains(id) || seed_hex.is_some() {
                node.keys_mut().put(id, parse_seed(seed_hex.as_deref())?)?;
            }
            let identity = identity_with_key(
                node.keys(),
                id,
                *kind,
                name.as_deref().unwrap_or(id),
                registered_by,
                gateway.clone(),
            )?;
            let roles: BTreeSet<Role> = roles.iter().copied().collect();
            let seq = node.register_identity(&identity, &roles, at)?;
            emit_ok(
                cli.format,
                &[
                    ("id", serde_json::Value::from(id.clone())),
                    ("seq", serde_json::Value::from(seq)),
                ],
            );
            Ok(())
        }
        IdentityCommand::List => {
            let node = open_node(cli)?;
            let registry = node.registry()?;
            let list: Vec<serde_json::Value> = registry
                .iter()
                .map(|e| {
                    serde_json::json!({
                        "id": e.identity.id,
                        "kind": e.identity.kind.as_str(),
                        "display_name": e.identity.display_name,
                        "registered_by": e.identity.registered_by,
                        "gateway_id": e.identity.gateway_id,
                        "roles": e.roles.iter().map(|r| r.as_str()).collect::<Vec<_>>(),
                        "seq": e.seq,
                    })
                })
                .collect();
            emit(cli.format, &list);
            Ok(())
        }
        IdentityCommand::Show { id } => {
            let node = open_node(cli)?;
            let registry = node.registry()?;
            let entry = registry.get(id).ok_or_else(|| {
                CliError::new("UnknownIdentity", format!("{id} is not registered"), EXIT_DOMAIN)
            })?;
            emit(
                cli.format,
                &serde_json::json!({
                    "id": entry.identity.id,
                    "kind": entry.identity.kind.as_str(),
                    "display_name": entry.identity.display_name,
                    "verification_key_hex":
                        agreechain::crypto::to_hex(&entry.identity.verification_key),
                    "registered_by": entry.identity.registered_by,
                    "gateway_id": entry.identity.gateway_id,
                    "roles": entry.roles.iter().map(|r| r.as_str()).collect::<Vec<_>>(),
                    "seq": entry.seq,
                }),
            );
            Ok(())
        }
    }
}

fn agreement_cmd(cli: &Cli, command: &AgreementCommand) -> Result<(), CliError> {
    match command {
        AgreementCommand::Validate { specs } => {
            let node = open_node(cli)?;
            let parsed: Vec<AgreementSpec> = specs
                .iter()
                .map(|p| read_json::<AgreementSpec>(p))
                .collect::<Result<_, _>>()?;
            let registry = node.registry()?;
            let book = AgreementBook::from_ledger(node.ledger())?;
            validate_bundle(&parsed, &registry, &book)?;
            let digests: BTreeMap<String, String> = parsed
                .iter()
                .map(|s| {
                    Ok((
                        s.id.clone(),
                        agreechain::crypto::to_hex(&spec_digest(s).map_err(|e| {
                            CliError::new("ValidationFailed", e, EXIT_DOMAIN)
                        })?),
                    ))
                })
                .collect::<Result<_, CliError>>()?;
            emit_ok(cli.format, &[("digests", serde_json::to_value(digests).unwrap())]);
            Ok(())
        }
        AgreementCommand::Sign { spec, party } => {
            let node = open_node(cli)?;
            let spec: AgreementSpec = read_json(spec)?;
            let signature = node.sign_agreement(&spec, party)?;
            emit(cli.format, &signature);
            Ok(())
        }
        AgreementCommand::Deploy { spec, sigs, at } => {
            let at = at.resolve()?;
            let mut node = open_node(cli)?;
            let spec: AgreementSpec = read_json(spec)?;
            let seq = node.deploy_agreement(&spec, sigs, at)?;
            emit_ok(
                cli.format,
                &[
                    ("id", serde_json::Value::from(spec.id.clone())),
                    ("seq", serde_json::Value::from(seq)),
                ],
            );
            Ok(())
        }
    }
}

fn metric_cmd(cli: &Cli, command: &MetricCommand) -> Result<(), CliError> {
    match command {
        MetricCommand::Record { agreement, metric, value, origin, at } => {
            let at = at.resolve()?;
            let mut node = open_node(cli)?;
            let result = node.record_metric(&MetricSample {
                agreement_id: agreement.clone(),
                metric: metric.clone(),
                value: *value,
                origin: origin.clone(),
                timestamp_ms: at,
            })?;
            emit(cli.format, &result);
            Ok(())
        }
    }
}

fn policy_cmd(cli: &Cli, command: &PolicyCommand) -> Result<(), CliError> {
    match command {
        PolicyCommand::Deploy { policy, at } => {
            let at = at.resolve()?;
            let mut node = open_node(cli)?;
            let policy: GovernancePolicy = read_json(policy)?;
            let seq = node.deploy_policy(&policy, at)?;
            emit_ok(
                cli.format,
                &[
                    ("id", serde_json::Value::from(policy.id.clone())),
                    ("seq", serde_json::Value::from(seq)),
                ],
            );
            Ok(())
        }
        PolicyCommand::List => {
            let node = open_node(cli)?;
            let book = agreechain::governance::PolicyBook::from_ledger(node.ledger())?;
            let list: Vec<&GovernancePolicy> = book.iter().collect();
            emit(cli.format, &list);
            Ok(())
        }
    }
}

fn share_cmd(cli: &Cli, command: &ShareCommand) -> Result<(), CliError> {
    match command {
        ShareCommand::Filter { policy, payload, at } => {
            let at = at.resolve()?;
            let mut node = open_node(cli)?;
            let payload: SharePayload = read_json(payload)?;
            let outcome = node.filter_share(policy, &payload, at)?;
            match outcome {
                FilterOutcome::Allowed(kept) => emit(
                    cli.format,
                    &serde_json::json!({ "decision": "allowed", "payload": kept }),
                ),
                FilterOutcome::Rejected(fields) => emit(
                    cli.format,
                    &serde_json::json!({ "decision": "rejected", "disallowed": fields }),
                ),
            }
            Ok(())
        }
    }
}

fn maint_cmd(cli: &Cli, command: &MaintCommand) -> Result<(), CliError> {
    let mut node = open_node(cli)?;
    let case_id = match command {
        MaintCommand::Deploy { case, .. }
        | MaintCommand::Detect { case, .. }
        | MaintCommand::Accept { case, .. }
        | MaintCommand::Mode { case, .. }
        | MaintCommand::Fix { case, .. }
        | MaintCommand::Finish { case, .. }
        | MaintCommand::Invoice { case, .. }
        | MaintCommand::Settle { case, .. }
        | MaintCommand::Show { case } => case.clone(),
        MaintCommand::Pending { org } => {
            let pending = node.pending_notifications(org)?;
            emit(cli.format, &pending);
            return Ok(());
        }
    };

    // Actors default to the identity the protocol expects.
    fn pick_actor(
        node: &Node,
        case_id: &str,
        actor: &Option<String>,
        pick: fn(&agreechain::maintenance::MaintenanceCase) -> String,
    ) -> Result<String, CliError> {
        match actor {
            Some(a) => Ok(a.clone()),
            None => Ok(pick(&node.maintenance_case(case_id)?)),
        }
    }

    match command {
        MaintCommand::Deploy { customer, provider, machine, maintenance_type, at, .. } => {
            let seq = node.deploy_case(
                &case_id,
                customer,
                provider,
                machine,
                *maintenance_type,
                at.resolve()?,
            )?;
            emit_case(cli, &node, &case_id, Some(seq))?;
        }
        MaintCommand::Detect { code, actor, at, .. } => {
            let actor = pick_actor(&node, &case_id, actor, |c| c.machine.clone())?;
            let seq = node.detect_error(&case_id, *code, &actor, at.resolve()?)?;
            emit_case(cli, &node, &case_id, Some(seq))?;
        }
        MaintCommand::Accept { actor, at, .. } => {
            let actor = pick_actor(&node, &case_id, actor, |c| c.provider.clone())?;
            let seq = node.accept_order(&case_id, &actor, at.resolve()?)?;
            emit_case(cli, &node, &case_id, Some(seq))?;
        }
        MaintCommand::Mode { technician, actor, at, .. } => {
            let actor = pick_actor(&node, &case_id, actor, |c| c.machine.clone())?;
            let seq = node.set_maintenance_mode(&case_id, technician, &actor, at.resolve()?)?;
            emit_case(cli, &node, &case_id, Some(seq))?;
        }
        MaintCommand::Fix { proof, .. } => {
            node.record_fix(&case_id, proof)?;
            save_overlay(&cli.ledger, &node)?;
            emit_case(cli, &node, &case_id, None)?;
        }
        MaintCommand::Finish { actor, at, .. } => {
            let actor = pick_actor(&node, &case_id, actor, |c| c.machine.clone())?;
            let seq = node.finish_maintenance(&case_id, &actor, at.resolve()?)?;
            save_overlay(&cli.ledger, &node)?;
            emit_case(cli, &node, &case_id, Some(seq))?;
        }
        MaintCommand::Invoice { invoice_id, amount, actor, at, .. } => {
            let actor = pick_actor(&node, &case_id, actor, |c| c.provider.clone())?;
            let seq = node.issue_invoice(&case_id, invoice_id, *amount, &actor, at.resolve()?)?;
            emit_case(cli, &node, &case_id, Some(seq))?;
        }
        MaintCommand::Settle { actor, at, .. } => {
            let actor = pick_actor(&node, &case_id, actor, |c| c.customer.clone())?;
            let seq = node.settle_invoice(&case_id, &actor, at.resolve()?)?;
            emit_case(cli, &node, &case_id, Some(seq))?;
        }
        MaintCommand::Show { .. } => {
            let case = node.maintenance_case(&case_id)?;
            emit(cli.format, &case);
        }
        MaintCommand::Pending { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn emit_case(cli: &Cli, node: &Node, case_id: &str, seq: Option<u64>) -> Result<(), CliError> {
    let case = node.maintenance_case(case_id)?;
    let mut fields = vec![
        ("case", serde_json::Value::from(case_id.to_string())),
        ("state", serde_json::Value::from(case.state.as_str())),
    ];
    if let Some(seq) = seq {
        fields.push(("seq", serde_json::Value::from(seq)));
    }
    emit_ok(cli.format, &fields);
    Ok(())
}

fn ledger_cmd(cli: &Cli, command: &LedgerCommand) -> Result<(), CliError> {
    match command {
        LedgerCommand::Verify => {
            let node = open_node(cli)?;
            match node.ledger().verify_chain()? {
                ChainStatus::Ok => {
                    emit(cli.format, &serde_json::json!({ "status": "ok" }));
                    Ok(())
                }
                ChainStatus::FirstInvalid { height, reason } => {
                    emit(
                        cli.format,
                        &serde_json::json!({
                            "status": "first_invalid",
                            "height": height,
                            "reason": reason.label(),
                            "detail": reason.to_string(),
                        }),
                    );
                    std::process::exit(EXIT_DOMAIN);
                }
            }
        }
        LedgerCommand::Query { kind, author, from_seq, to_seq } => {
            let node = open_node(cli)?;
            let seq_range = match (from_seq, to_seq) {
                (None, None) => None,
                (lo, hi) => Some((lo.unwrap_or(0), hi.unwrap_or(u64::MAX))),
            };
            let filter = TxFilter { kind: *kind, author: author.clone(), seq_range };
            let txs = node.ledger().query(&filter);
            if cli.format == Format::Csv {
                println!("seq,timestamp_ms,author,kind");
                for tx in txs {
                    println!("{},{},{},{}", tx.seq, tx.timestamp_ms, tx.author, tx.kind);
                }
            } else {
                let out: Vec<serde_json::Value> = txs.iter().map(|tx| tx_summary(tx)).collect();
                emit(cli.format, &out);
            }
            Ok(())
        }
    }
}

fn sim_cmd(cli: &Cli, command: &SimCommand) -> Result<(), CliError> {
    match command {
        SimCommand::Run { workflow, trials, seed, prob, prob_file, out } => {
            let probability = match (prob, prob_file) {
                (Some(p), None) => ProbabilityOverride::Uniform(*p),
                (None, Some(path)) => ProbabilityOverride::PerMode(read_json(path)?),
                (None, None) => ProbabilityOverride::Default,
                (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
            };
            let config = SimulationConfig {
                workflow: *workflow,
                probability,
                trials: *trials,
                seed: *seed,
            };
            let report = simulator::run_monte_carlo(&config)?;
            if let Some(path) = out {
                let body = serde_json::to_string(&report).expect("report serializes");
                std::fs::write(path, body)
                    .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            }
            if cli.format == Format::Csv {
                print!("{}", report_csv(&report));
            } else {
                emit(cli.format, &report);
            }
            Ok(())
        }
        SimCommand::Compare { report_a, report_b } => {
            let a: SimulationReport = read_json(report_a)?;
            let b: SimulationReport = read_json(report_b)?;
            let comparison = simulator::compare(&a, &b)?;
            emit(cli.format, &comparison);
            Ok(())
        }
        SimCommand::Sources { workflow } => {
            let model = simulator::build_workflow(*workflow);
            let sources = model.failure_sources();
            if cli.format == Format::Csv {
                println!("task_index,mode_id,description,default_probability");
                for s in &sources {
                    println!(
                        "{},{},\"{}\",{}",
                        s.task_index, s.mode_id, s.description, s.default_probability
                    );
                }
            } else {
                emit(
                    cli.format,
                    &serde_json::json!({
                        "workflow": model.name.as_str(),
                        "count": sources.len(),
                        "sources": sources,
                    }),
                );
            }
            Ok(())
        }
    }
}
