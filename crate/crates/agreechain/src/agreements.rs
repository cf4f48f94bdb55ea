//! Executable agreements at three levels (SLA, PLA, BLA): metric monitoring
//! against thresholds over sliding sample windows, with actions triggered on
//! violation and everything documented on the ledger.
//!
//! Metric values are scaled integers (`value * 10^scale_exponent`), never
//! floats, so every signed payload has exactly one encoding. A window is
//! violated when any sample among the last `window` samples breaches the
//! comparator; one ViolationRaised transaction is appended per
//! Compliant -> Violated transition and not re-raised while the violation
//! persists.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::crypto;
use crate::error::{AgreementError, CanonicalError};
use crate::identity::{IdentityKind, Registry};
use crate::ledger::{Ledger, TxFilter, TxKind};
use crate::node::Node;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Agreement level. Dependencies may only point at the same or a lower
/// level, in the order SLA < PLA < BLA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgreementLevel {
    #[serde(rename = "SLA")]
    Sla,
    #[serde(rename = "PLA")]
    Pla,
    #[serde(rename = "BLA")]
    Bla,
}

impl AgreementLevel {
    pub const fn rank(self) -> u8 {
        match self {
            Self::Sla => 0,
            Self::Pla => 1,
            Self::Bla => 2,
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Self::Sla => "SLA",
            Self::Pla => "PLA",
            Self::Bla => "BLA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "GE")]
    Ge,
    #[serde(rename = "LE")]
    Le,
    #[serde(rename = "EQ")]
    Eq,
    InRange,
}

impl Comparator {
    /// Breach test on scaled integers. Values exactly at a bound comply:
    /// GE/LE/EQ read `lo` as the single bound, InRange is inclusive on both
    /// ends.
    pub fn breaches(self, value: i64, lo: i64, hi: i64) -> bool {
        match self {
            Self::Ge => value < lo,
            Self::Le => value > lo,
            Self::Eq => value != lo,
            Self::InRange => value < lo || value > hi,
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Self::Ge => "GE",
            Self::Le => "LE",
            Self::Eq => "EQ",
            Self::InRange => "InRange",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub name: String,
    pub unit: String,
    /// Values are stored as integer * 10^scale_exponent.
    pub scale_exponent: i32,
    pub comparator: Comparator,
    pub threshold_lo: i64,
    pub threshold_hi: i64,
    /// Compliance is judged over this many most recent samples.
    pub window: u32,
    /// Gateway or Machine identity that delivers this metric.
    pub source: String,
}

impl MetricSpec {
    pub fn breaches(&self, value: i64) -> bool {
        self.comparator.breaches(value, self.threshold_lo, self.threshold_hi)
    }

    fn breached_bound(&self, value: i64) -> i64 {
        match self.comparator {
            Comparator::InRange if value > self.threshold_hi => self.threshold_hi,
            _ => self.threshold_lo,
        }
    }
}

/// What to do when a window turns violated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "target")]
pub enum Action {
    RaiseViolationTx,
    NotifyParty(String),
    SuspendAgreement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgreementSpec {
    pub id: String,
    pub level: AgreementLevel,
    /// At least two distinct, registered organizations.
    pub parties: Vec<String>,
    pub metrics: Vec<MetricSpec>,
    #[serde(default)]
    pub actions_on_violation: Vec<Action>,
    pub valid_from: u64,
    pub valid_to: u64,
    #[serde(default)]
    pub depends_on: Vec<String>,
}

/// Canonical digest of an agreement spec; this is what every party signs.
pub fn spec_digest(spec: &AgreementSpec) -> Result<[u8; 32], CanonicalError> {
    canonical::canonical_digest(spec)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartySignature {
    pub party: String,
    pub signature_hex: String,
}

/// One metric observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSample {
    pub agreement_id: String,
    pub metric: String,
    pub value: i64,
    /// Sensor or Machine the value came from.
    pub origin: String,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvaluationStatus {
    Compliant,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationDetail {
    pub metric: String,
    pub observed: i64,
    pub bound: i64,
    pub comparator: Comparator,
    pub window: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub status: EvaluationStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<ViolationDetail>,
    /// True when this sample caused a Compliant -> Violated transition (a
    /// ViolationRaised transaction was appended).
    pub newly_raised: bool,
}

// ---------------------------------------------------------------------------
// Payload documents
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgreementPayload {
    pub spec: AgreementSpec,
    pub party_signatures: Vec<PartySignature>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricPayload {
    pub agreement_id: String,
    pub metric: String,
    pub value: i64,
    pub origin: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViolationPayload {
    pub agreement_id: String,
    pub metric: String,
    pub observed: i64,
    pub bound: i64,
    pub comparator: Comparator,
    pub window: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionPayload {
    pub agreement_id: String,
    pub metric: String,
    pub triggered: Action,
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Why a spec was rejected by the pre-deployment validator.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecIssue {
    #[error("CyclicDependency: {0}")]
    CyclicDependency(String),
    #[error("TooFewParties: an agreement needs at least two parties")]
    TooFewParties,
    #[error("DuplicateParty: {0}")]
    DuplicateParty(String),
    #[error("UnregisteredParty: {0}")]
    UnregisteredParty(String),
    #[error("PartyNotOrganization: {0}")]
    PartyNotOrganization(String),
    #[error("EmptyMetrics: an agreement needs at least one metric")]
    EmptyMetrics,
    #[error("DuplicateMetric: {0}")]
    DuplicateMetric(String),
    #[error("ZeroWindow: metric {0}")]
    ZeroWindow(String),
    #[error("BadThresholds: metric {0}: threshold_lo must be <= threshold_hi for InRange")]
    BadThresholds(String),
    #[error("PointComparatorBounds: metric {0}: GE/LE/EQ require threshold_hi == threshold_lo")]
    PointComparatorBounds(String),
    #[error("UnknownMetricSource: metric {metric} names unregistered source {source_id}")]
    UnknownMetricSource { metric: String, source_id: String },
    #[error("BadMetricSourceKind: metric {metric} source {source_id} must be a Gateway or Machine")]
    BadMetricSourceKind { metric: String, source_id: String },
    #[error("NotifyTargetNotParty: {0}")]
    NotifyTargetNotParty(String),
    #[error("EmptyValidity: valid_from must be < valid_to")]
    EmptyValidity,
    #[error("LevelOrder: dependency {dep} at level {dep_level} exceeds own level {own_level}")]
    LevelOrder { dep: String, dep_level: String, own_level: String },
    #[error("UnknownMetric: {0}")]
    UnknownMetric(String),
}

fn validate_spec_shape(spec: &AgreementSpec, registry: &Registry) -> Result<(), AgreementError> {
    let fail = |issue: SpecIssue| Err(AgreementError::ValidationFailed(issue));
    if spec.parties.len() < 2 {
        return fail(SpecIssue::TooFewParties);
    }
    let mut seen = BTreeSet::new();
    for party in &spec.parties {
        if !seen.insert(party) {
            return fail(SpecIssue::DuplicateParty(party.clone()));
        }
        match registry.kind(party) {
            None => return fail(SpecIssue::UnregisteredParty(party.clone())),
            Some(IdentityKind::Organization) => {}
            Some(_) => return fail(SpecIssue::PartyNotOrganization(party.clone())),
        }
    }
    if spec.metrics.is_empty() {
        return fail(SpecIssue::EmptyMetrics);
    }
    let mut metric_names = BTreeSet::new();
    for metric in &spec.metrics {
        if !metric_names.insert(&metric.name) {
            return fail(SpecIssue::DuplicateMetric(metric.name.clone()));
        }
        if metric.window == 0 {
            return fail(SpecIssue::ZeroWindow(metric.name.clone()));
        }
        match metric.comparator {
            Comparator::InRange => {
                if metric.threshold_lo > metric.threshold_hi {
                    return fail(SpecIssue::BadThresholds(metric.name.clone()));
                }
            }
            _ => {
                if metric.threshold_lo != metric.threshold_hi {
                    return fail(SpecIssue::PointComparatorBounds(metric.name.clone()));
                }
            }
        }
        match registry.kind(&metric.source) {
            None => {
                return fail(SpecIssue::UnknownMetricSource {
                    metric: metric.name.clone(),
                    source_id: metric.source.clone(),
                })
            }
            Some(IdentityKind::Gateway | IdentityKind::Machine) => {}
            Some(_) => {
                return fail(SpecIssue::BadMetricSourceKind {
                    metric: metric.name.clone(),
                    source_id: metric.source.clone(),
                })
            }
        }
    }
    for action in &spec.actions_on_violation {
        if let Action::NotifyParty(target) = action {
            if !spec.parties.contains(target) {
                return fail(SpecIssue::NotifyTargetNotParty(target.clone()));
            }
        }
    }
    if spec.valid_from >= spec.valid_to {
        return fail(SpecIssue::EmptyValidity);
    }
    Ok(())
}

/// Dependency checks for a set of candidate specs against already deployed
/// agreements: every dependency must resolve (deployed or in the set), levels
/// must not increase along an edge, and the combined graph must be acyclic.
fn validate_dependencies(
    candidates: &[&AgreementSpec],
    book: &AgreementBook,
) -> Result<(), AgreementError> {
    let mut levels: BTreeMap<&str, AgreementLevel> = BTreeMap::new();
    let mut edges: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for deployed in book.iter() {
        levels.insert(&deployed.spec.id, deployed.spec.level);
        edges.insert(
            &deployed.spec.id,
            deployed.spec.depends_on.iter().map(String::as_str).collect(),
        );
    }
    for spec in candidates {
        levels.insert(&spec.id, spec.level);
        edges.insert(&spec.id, spec.depends_on.iter().map(String::as_str).collect());
    }
    for spec in candidates {
        for dep in &spec.depends_on {
            let dep_level = levels
                .get(dep.as_str())
                .ok_or_else(|| AgreementError::UnknownDependency(dep.clone()))?;
            if dep_level.rank() > spec.level.rank() {
                return Err(AgreementError::ValidationFailed(SpecIssue::LevelOrder {
                    dep: dep.clone(),
                    dep_level: dep_level.as_str().to_string(),
                    own_level: spec.level.as_str().to_string(),
                }));
            }
        }
    }

    // DFS cycle detection over deployed + candidate edges.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Visiting,
        Done,
    }
    fn visit<'a>(
        id: &'a str,
        edges: &BTreeMap<&'a str, Vec<&'a str>>,
        marks: &mut BTreeMap<&'a str, Mark>,
        path: &mut Vec<&'a str>,
    ) -> Result<(), String> {
        match marks.get(id) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Visiting) => {
                let start = path.iter().position(|p| *p == id).unwrap_or(0);
                let mut cycle: Vec<&str> = path[start..].to_vec();
                cycle.push(id);
                return Err(cycle.join(" -> "));
            }
            None => {}
        }
        marks.insert(id, Mark::Visiting);
        path.push(id);
        for dep in edges.get(id).into_iter().flatten() {
            visit(dep, edges, marks, path)?;
        }
        path.pop();
        marks.insert(id, Mark::Done);
        Ok(())
    }

    let mut marks = BTreeMap::new();
    for spec in candidates {
        visit(&spec.id, &edges, &mut marks, &mut Vec::new()).map_err(|cycle| {
            AgreementError::ValidationFailed(SpecIssue::CyclicDependency(cycle))
        })?;
    }
    Ok(())
}

/// Validate a set of agreement specs together (e.g. a bundle of files before
/// signature collection). Dependencies may point at deployed agreements or at
/// other members of the bundle.
pub fn validate_bundle(
    specs: &[AgreementSpec],
    registry: &Registry,
    book: &AgreementBook,
) -> Result<(), AgreementError> {
    let mut ids = BTreeSet::new();
    for spec in specs {
        if !ids.insert(&spec.id) || book.get(&spec.id).is_some() {
            return Err(AgreementError::DuplicateAgreement(spec.id.clone()));
        }
        validate_spec_shape(spec, registry)?;
    }
    let refs: Vec<&AgreementSpec> = specs.iter().collect();
    validate_dependencies(&refs, book)
}

// ---------------------------------------------------------------------------
// Deployed-agreement view
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DeployedAgreement {
    pub spec: AgreementSpec,
    /// Seq of the AgreementDeployed transaction.
    pub seq: u64,
    /// Set once a SuspendAgreement action has fired.
    pub suspended: bool,
}

impl DeployedAgreement {
    /// Active iff within the validity window (half-open) and not suspended.
    pub fn active_at(&self, at_ms: u64) -> bool {
        !self.suspended && at_ms >= self.spec.valid_from && at_ms < self.spec.valid_to
    }
}

/// View over AgreementDeployed and ActionTriggered transactions.
#[derive(Debug, Clone, Default)]
pub struct AgreementBook {
    agreements: BTreeMap<String, DeployedAgreement>,
}

impl AgreementBook {
    pub fn from_ledger(ledger: &Ledger) -> Result<Self, AgreementError> {
        let mut agreements = BTreeMap::new();
        for tx in ledger.iter_txs() {
            match tx.kind {
                TxKind::AgreementDeployed => {
                    let payload: AgreementPayload = serde_json::from_slice(&tx.payload)
                        .map_err(|e| bad_payload(tx.seq, &e))?;
                    agreements.insert(
                        payload.spec.id.clone(),
                        DeployedAgreement { spec: payload.spec, seq: tx.seq, suspended: false },
                    );
                }
                TxKind::ActionTriggered => {
                    let payload: ActionPayload = serde_json::from_slice(&tx.payload)
                        .map_err(|e| bad_payload(tx.seq, &e))?;
                    if payload.triggered == Action::SuspendAgreement {
                        if let Some(agreement) = agreements.get_mut(&payload.agreement_id) {
                            agreement.suspended = true;
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(Self { agreements })
    }

    pub fn get(&self, id: &str) -> Option<&DeployedAgreement> {
        self.agreements.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DeployedAgreement> {
        self.agreements.values()
    }
}

fn bad_payload(seq: u64, err: &serde_json::Error) -> AgreementError {
    AgreementError::Ledger(crate::error::LedgerError::NonCanonicalPayload(format!(
        "tx {seq}: {err}"
    )))
}

/// All recorded values for one agreement metric, in seq order.
fn metric_values(ledger: &Ledger, agreement_id: &str, metric: &str) -> Vec<i64> {
    ledger
        .query(&TxFilter::kind(TxKind::MetricRecorded))
        .into_iter()
        .filter_map(|tx| serde_json::from_slice::<MetricPayload>(&tx.payload).ok())
        .filter(|p| p.agreement_id == agreement_id && p.metric == metric)
        .map(|p| p.value)
        .collect()
}

/// Violated iff any sample among the last `window` samples breaches.
fn window_violated(values: &[i64], metric: &MetricSpec) -> bool {
    let start = values.len().saturating_sub(metric.window as usize);
    values[start..].iter().any(|v| metric.breaches(*v))
}

fn window_detail(values: &[i64], metric: &MetricSpec) -> Option<ViolationDetail> {
    let start = values.len().saturating_sub(metric.window as usize);
    let observed = *values[start..].iter().rev().find(|v| metric.breaches(**v))?;
    Some(ViolationDetail {
        metric: metric.name.clone(),
        observed,
        bound: metric.breached_bound(observed),
        comparator: metric.comparator,
        window: metric.window,
    })
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Compliance summary over a seq range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub agreement_id: String,
    pub from_seq: u64,
    pub to_seq: u64,
    pub sample_count: u64,
    /// Samples whose value breaches their metric's comparator.
    pub breach_count: u64,
    /// ViolationRaised transactions in range.
    pub violation_count: u64,
    /// Compliant samples / total samples (1.0 when no samples).
    pub uptime_ratio: f64,
    pub violations: Vec<ViolationPayload>,
}

impl Node {
    /// Deploy an agreement carrying every party's signature over the
    /// canonical spec digest. The transaction is authored by the first party.
    pub fn deploy_agreement(
        &mut self,
        spec: &AgreementSpec,
        signatures: &[PartySignature],
        at_ms: u64,
    ) -> Result<u64, AgreementError> {
        let registry = self.registry()?;
        let book = AgreementBook::from_ledger(self.ledger())?;
        if book.get(&spec.id).is_some() {
            return Err(AgreementError::DuplicateAgreement(spec.id.clone()));
        }
        validate_spec_shape(spec, &registry)?;
        validate_dependencies(&[spec], &book)?;

        let digest = spec_digest(spec)?;
        let mut ordered = Vec::with_capacity(spec.parties.len());
        for party in &spec.parties {
            let sig = signatures
                .iter()
                .find(|s| s.party == *party)
                .ok_or_else(|| AgreementError::MissingPartySignature(party.clone()))?;
            let bytes = crypto::from_hex_exact::<{ crypto::SIG_LEN }>(&sig.signature_hex)
                .ok_or_else(|| AgreementError::BadPartySignature(party.clone()))?;
            let entry = registry
                .get(party)
                .expect("validated above");
            let key = crypto::verifying_key_from_bytes(&entry.identity.verification_key)
                .ok_or_else(|| AgreementError::BadPartySignature(party.clone()))?;
            if !crypto::verify_digest(&key, &digest, &bytes) {
                return Err(AgreementError::BadPartySignature(party.clone()));
            }
            ordered.push(sig.clone());
        }

        let payload = AgreementPayload { spec: spec.clone(), party_signatures: ordered };
        let tx = self.signed_tx(
            self.ledger().next_seq(),
            at_ms,
            &spec.parties[0],
            TxKind::AgreementDeployed,
            &payload,
        )?;
        let seq = tx.seq;
        self.ledger_mut().append(vec![tx])?;
        Ok(seq)
    }

    /// Sign an agreement spec digest on behalf of a party whose key is in the
    /// local store.
    pub fn sign_agreement(
        &self,
        spec: &AgreementSpec,
        party: &str,
    ) -> Result<PartySignature, AgreementError> {
        let digest = spec_digest(spec)?;
        let key = self.keys().signing_key(party)?;
        Ok(PartySignature {
            party: party.to_string(),
            signature_hex: crypto::to_hex(&crypto::sign_digest(&key, &digest)),
        })
    }

    /// Record a metric sample, re-evaluate its window and, on a
    /// Compliant -> Violated transition, append one ViolationRaised plus one
    /// ActionTriggered per configured action — all in the same block as the
    /// sample.
    pub fn record_metric(&mut self, sample: &MetricSample) -> Result<EvaluationResult, AgreementError> {
        let registry = self.registry()?;
        let book = AgreementBook::from_ledger(self.ledger())?;
        let agreement = book
            .get(&sample.agreement_id)
            .ok_or_else(|| AgreementError::UnknownAgreement(sample.agreement_id.clone()))?;
        if !agreement.active_at(sample.timestamp_ms) {
            return Err(AgreementError::InactiveAgreement {
                id: sample.agreement_id.clone(),
                at_ms: sample.timestamp_ms,
            });
        }
        let metric = agreement
            .spec
            .metrics
            .iter()
            .find(|m| m.name == sample.metric)
            .ok_or_else(|| {
                AgreementError::ValidationFailed(SpecIssue::UnknownMetric(sample.metric.clone()))
            })?;

        // Origin binding decides the transaction author: machines report
        // directly, sensor readings are signed by their gateway.
        let source_kind = registry.kind(&metric.source);
        let author = match source_kind {
            Some(IdentityKind::Machine) if sample.origin == metric.source => metric.source.clone(),
            Some(IdentityKind::Gateway) => {
                let bound = registry
                    .get(&sample.origin)
                    .filter(|e| e.identity.kind == IdentityKind::Sensor)
                    .is_some_and(|e| e.identity.gateway_id.as_deref() == Some(&metric.source));
                if !bound {
                    return Err(AgreementError::UnauthorizedOrigin {
                        origin: sample.origin.clone(),
                        metric: sample.metric.clone(),
                    });
                }
                metric.source.clone()
            }
            _ => {
                return Err(AgreementError::UnauthorizedOrigin {
                    origin: sample.origin.clone(),
                    metric: sample.metric.clone(),
                })
            }
        };

        let prior = metric_values(self.ledger(), &sample.agreement_id, &sample.metric);
        let was_violated = window_violated(&prior, metric);
        let mut all = prior;
        all.push(sample.value);
        let now_violated = window_violated(&all, metric);

        let payload = MetricPayload {
            agreement_id: sample.agreement_id.clone(),
            metric: sample.metric.clone(),
            value: sample.value,
            origin: sample.origin.clone(),
        };
        let mut seq = self.ledger().next_seq();
        let mut txs = vec![self.signed_tx(
            seq,
            sample.timestamp_ms,
            &author,
            TxKind::MetricRecorded,
            &payload,
        )?];

        let newly_raised = now_violated && !was_violated;
        let violation = if now_violated { window_detail(&all, metric) } else { None };
        if newly_raised {
            let detail = violation.as_ref().expect("violated window has a breaching sample");
            let violation_payload = ViolationPayload {
                agreement_id: sample.agreement_id.clone(),
                metric: detail.metric.clone(),
                observed: detail.observed,
                bound: detail.bound,
                comparator: detail.comparator,
                window: detail.window,
            };
            seq += 1;
            let root = self.root().to_string();
            txs.push(self.signed_tx(
                seq,
                sample.timestamp_ms,
                &root,
                TxKind::ViolationRaised,
                &violation_payload,
            )?);
            for action in &agreement.spec.actions_on_violation {
                let action_payload = ActionPayload {
                    agreement_id: sample.agreement_id.clone(),
                    metric: sample.metric.clone(),
                    triggered: action.clone(),
                };
                seq += 1;
                txs.push(self.signed_tx(
                    seq,
                    sample.timestamp_ms,
                    &root,
                    TxKind::ActionTriggered,
                    &action_payload,
                )?);
            }
        }
        self.ledger_mut().append(txs)?;

        Ok(EvaluationResult {
            status: if now_violated { EvaluationStatus::Violated } else { EvaluationStatus::Compliant },
            violation,
            newly_raised,
        })
    }

    /// Pure read over the ledger: samples, breaches, raised violations and
    /// the uptime ratio for one agreement within an inclusive seq range.
    pub fn compliance_report(
        &self,
        agreement_id: &str,
        range: Option<(u64, u64)>,
    ) -> Result<ComplianceReport, AgreementError> {
        let book = AgreementBook::from_ledger(self.ledger())?;
        let agreement = book
            .get(agreement_id)
            .ok_or_else(|| AgreementError::UnknownAgreement(agreement_id.to_string()))?;
        let (from_seq, to_seq) = range.unwrap_or((0, u64::MAX));
        let metrics: BTreeMap<&str, &MetricSpec> =
            agreement.spec.metrics.iter().map(|m| (m.name.as_str(), m)).collect();

        let mut sample_count = 0u64;
        let mut breach_count = 0u64;
        let filter = TxFilter { seq_range: Some((from_seq, to_seq)), ..TxFilter::default() };
        let mut violations = Vec::new();
        for tx in self.ledger().query(&filter) {
            match tx.kind {
                TxKind::MetricRecorded => {
                    let Ok(payload) = serde_json::from_slice::<MetricPayload>(&tx.payload) else {
                        continue;
                    };
                    if payload.agreement_id != agreement_id {
                        continue;
                    }
                    sample_count += 1;
                    if metrics
                        .get(payload.metric.as_str())
                        .is_some_and(|m| m.breaches(payload.value))
                    {
                        breach_count += 1;
                    }
                }
                TxKind::ViolationRaised => {
                    let Ok(payload) = serde_json::from_slice::<ViolationPayload>(&tx.payload)
                    else {
                        continue;
                    };
                    if payload.agreement_id == agreement_id {
                        violations.push(payload);
                    }
                }
                _ => {}
            }
        }
        let uptime_ratio = if sample_count == 0 {
            1.0
        } else {
            (sample_count - breach_count) as f64 / sample_count as f64
        };
        Ok(ComplianceReport {
            agreement_id: agreement_id.to_string(),
            from_seq,
            to_seq,
            sample_count,
            breach_count,
            violation_count: violations.len() as u64,
            uptime_ratio,
            violations,
        })
    }
}
