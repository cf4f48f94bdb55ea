//! Agreement engine: deployment, metric windows, violations, reports.

mod common;

use agreechain::agreements::{
    spec_digest, validate_bundle, Action, AgreementBook, AgreementLevel, AgreementSpec,
    Comparator, EvaluationStatus, MetricSample, MetricSpec, PartySignature, SpecIssue,
};
use agreechain::{AgreementError, Node, TxFilter, TxKind};
use common::*;
use tempfile::TempDir;

fn metric(name: &str, comparator: Comparator, lo: i64, hi: i64, window: u32) -> MetricSpec {
    MetricSpec {
        name: name.to_string(),
        unit: "unit".to_string(),
        scale_exponent: 0,
        comparator,
        threshold_lo: lo,
        threshold_hi: hi,
        window,
        source: "m_x".to_string(),
    }
}

fn bandwidth_sla(id: &str) -> AgreementSpec {
    AgreementSpec {
        id: id.to_string(),
        level: AgreementLevel::Sla,
        parties: vec!["company_z".into(), "company_x".into()],
        metrics: vec![MetricSpec {
            name: "bandwidth".into(),
            unit: "Mbit/s".into(),
            scale_exponent: 0,
            comparator: Comparator::Ge,
            threshold_lo: 100,
            threshold_hi: 100,
            window: 1,
            source: "m_x".into(),
        }],
        actions_on_violation: vec![Action::RaiseViolationTx],
        valid_from: 1_500,
        valid_to: 1_000_000,
        depends_on: vec![],
    }
}

fn sign_all(node: &Node, spec: &AgreementSpec) -> Vec<PartySignature> {
    spec.parties
        .iter()
        .map(|p| node.sign_agreement(spec, p).unwrap())
        .collect()
}

fn deploy(node: &mut Node, spec: &AgreementSpec, at: u64) -> u64 {
    let sigs = sign_all(node, spec);
    node.deploy_agreement(spec, &sigs, at).unwrap()
}

fn sample(agreement: &str, name: &str, value: i64, at: u64) -> MetricSample {
    MetricSample {
        agreement_id: agreement.to_string(),
        metric: name.to_string(),
        value,
        origin: "m_x".to_string(),
        timestamp_ms: at,
    }
}

#[test]
fn sla_with_all_party_signatures_deploys() {
    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);
    let spec = bandwidth_sla("sla_bw");
    let seq = deploy(&mut node, &spec, 1_600);
    let book = AgreementBook::from_ledger(node.ledger()).unwrap();
    let deployed = book.get("sla_bw").unwrap();
    assert_eq!(deployed.seq, seq);
    assert!(deployed.active_at(1_600));
}

#[test]
fn missing_party_signature_is_rejected() {
    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);
    let spec = bandwidth_sla("sla_bw");
    let only_one = vec![node.sign_agreement(&spec, "company_z").unwrap()];
    let err = node.deploy_agreement(&spec, &only_one, 1_600).unwrap_err();
    assert!(matches!(err, AgreementError::MissingPartySignature(p) if p == "company_x"));
}

#[test]
fn tampered_party_signature_is_rejected() {
    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);
    let spec = bandwidth_sla("sla_bw");
    let mut sigs = sign_all(&node, &spec);
    sigs[0].signature_hex = "00".repeat(64);
    let err = node.deploy_agreement(&spec, &sigs, 1_600).unwrap_err();
    assert!(matches!(err, AgreementError::BadPartySignature(_)));
}

#[test]
fn two_cycle_bundle_fails_with_cyclic_dependency() {
    let dir = TempDir::new().unwrap();
    let node = standard_fixture(&dir);
    let mut a = bandwidth_sla("sla_a");
    a.depends_on = vec!["sla_b".into()];
    let mut b = bandwidth_sla("sla_b");
    b.depends_on = vec!["sla_a".into()];

    let registry = node.registry().unwrap();
    let book = AgreementBook::from_ledger(node.ledger()).unwrap();
    let err = validate_bundle(&[a, b], &registry, &book).unwrap_err();
    assert!(matches!(
        err,
        AgreementError::ValidationFailed(SpecIssue::CyclicDependency(_))
    ));
}

#[test]
fn self_dependency_fails_at_deploy() {
    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);
    let mut spec = bandwidth_sla("sla_self");
    spec.depends_on = vec!["sla_self".into()];
    let sigs = sign_all(&node, &spec);
    let err = node.deploy_agreement(&spec, &sigs, 1_600).unwrap_err();
    assert!(matches!(
        err,
        AgreementError::ValidationFailed(SpecIssue::CyclicDependency(_))
    ));
}

#[test]
fn unknown_dependency_is_rejected() {
    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);
    let mut spec = bandwidth_sla("sla_dep");
    spec.depends_on = vec!["never_deployed".into()];
    let sigs = sign_all(&node, &spec);
    let err = node.deploy_agreement(&spec, &sigs, 1_600).unwrap_err();
    assert!(matches!(err, AgreementError::UnknownDependency(d) if d == "never_deployed"));
}

#[test]
fn dependency_levels_may_not_increase() {
    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);
    deploy(&mut node, &bandwidth_sla("sla_base"), 1_600);

    // A BLA may depend on an SLA.
    let mut bla = bandwidth_sla("bla_top");
    bla.level = AgreementLevel::Bla;
    bla.metrics[0].name = "produced workpieces".into();
    bla.depends_on = vec!["sla_base".into()];
    deploy(&mut node, &bla, 1_601);

    // An SLA may not depend on a BLA.
    let mut sla = bandwidth_sla("sla_low");
    sla.depends_on = vec!["bla_top".into()];
    let sigs = sign_all(&node, &sla);
    let err = node.deploy_agreement(&sla, &sigs, 1_602).unwrap_err();
    assert!(matches!(
        err,
        AgreementError::ValidationFailed(SpecIssue::LevelOrder { .. })
    ));
}

type TruthRow = (Comparator, i64, i64, [(i64, bool); 3]);

/// Comparator truth table against frozen expected verdicts, both at the
/// comparator level and through record_metric with window 1.
#[test]
fn comparator_truth_table_matches_oracle() {
    // (comparator, lo, hi, [(value, breaches)]).
    let table: [TruthRow; 4] = [
        (Comparator::Ge, 100, 100, [(99, true), (100, false), (101, false)]),
        (Comparator::Le, 100, 100, [(99, false), (100, false), (101, true)]),
        (Comparator::Eq, 100, 100, [(99, true), (100, false), (101, true)]),
        (Comparator::InRange, 90, 110, [(89, true), (90, false), (111, true)]),
    ];
    for (comparator, lo, hi, cases) in &table {
        for (value, expected) in cases {
            assert_eq!(
                comparator.breaches(*value, *lo, *hi),
                *expected,
                "{comparator:?} value {value}"
            );
        }
    }

    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);
    let mut spec = bandwidth_sla("truth");
    spec.metrics = vec![
        metric("m_ge", Comparator::Ge, 100, 100, 1),
        metric("m_le", Comparator::Le, 100, 100, 1),
        metric("m_eq", Comparator::Eq, 100, 100, 1),
        metric("m_rng", Comparator::InRange, 90, 110, 1),
    ];
    deploy(&mut node, &spec, 1_600);

    let mut at = 2_000;
    for (comparator, name) in [
        (Comparator::Ge, "m_ge"),
        (Comparator::Le, "m_le"),
        (Comparator::Eq, "m_eq"),
        (Comparator::InRange, "m_rng"),
    ] {
        let (lo, hi, cases) = table
            .iter()
            .find(|(c, ..)| *c == comparator)
            .map(|(_, lo, hi, cases)| (*lo, *hi, cases))
            .unwrap();
        let _ = (lo, hi);
        for (value, expected_breach) in cases {
            at += 1;
            let result = node.record_metric(&sample("truth", name, *value, at)).unwrap();
            let expected = if *expected_breach {
                EvaluationStatus::Violated
            } else {
                EvaluationStatus::Compliant
            };
            assert_eq!(result.status, expected, "{name} value {value}");
        }
    }
}

#[test]
fn breaching_sample_reports_observed_and_bound() {
    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);
    deploy(&mut node, &bandwidth_sla("sla_bw"), 1_600);

    let ok = node.record_metric(&sample("sla_bw", "bandwidth", 120, 2_000)).unwrap();
    assert_eq!(ok.status, EvaluationStatus::Compliant);
    assert_eq!(node.ledger().query(&TxFilter::kind(TxKind::ViolationRaised)).len(), 0);

    let bad = node.record_metric(&sample("sla_bw", "bandwidth", 80, 2_001)).unwrap();
    assert_eq!(bad.status, EvaluationStatus::Violated);
    assert!(bad.newly_raised);
    let detail = bad.violation.unwrap();
    assert_eq!(detail.observed, 80);
    assert_eq!(detail.bound, 100);
    assert_eq!(node.ledger().query(&TxFilter::kind(TxKind::ViolationRaised)).len(), 1);
    // One ActionTriggered for the configured RaiseViolationTx action.
    assert_eq!(node.ledger().query(&TxFilter::kind(TxKind::ActionTriggered)).len(), 1);
}

#[test]
fn pla_processing_time_above_bound_is_violated() {
    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);
    let mut spec = bandwidth_sla("pla_proc");
    spec.level = AgreementLevel::Pla;
    spec.metrics = vec![MetricSpec {
        name: "processing time".into(),
        unit: "ms".into(),
        scale_exponent: 0,
        comparator: Comparator::Le,
        threshold_lo: 5_000,
        threshold_hi: 5_000,
        window: 1,
        source: "m_x".into(),
    }];
    deploy(&mut node, &spec, 1_600);
    let result = node.record_metric(&sample("pla_proc", "processing time", 6_200, 2_000)).unwrap();
    assert_eq!(result.status, EvaluationStatus::Violated);
}

#[test]
fn bla_workpieces_all_above_quota_reports_zero_violations() {
    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);
    let mut spec = bandwidth_sla("bla_parts");
    spec.level = AgreementLevel::Bla;
    spec.metrics = vec![MetricSpec {
        name: "produced workpieces".into(),
        unit: "pieces/day".into(),
        scale_exponent: 0,
        comparator: Comparator::Ge,
        threshold_lo: 500,
        threshold_hi: 500,
        window: 1,
        source: "m_x".into(),
    }];
    deploy(&mut node, &spec, 1_600);
    for (i, count) in [620, 580, 510, 700].iter().enumerate() {
        let result = node
            .record_metric(&sample("bla_parts", "produced workpieces", *count, 2_000 + i as u64))
            .unwrap();
        assert_eq!(result.status, EvaluationStatus::Compliant);
    }
    let report = node.compliance_report("bla_parts", None).unwrap();
    assert_eq!(report.sample_count, 4);
    assert_eq!(report.violation_count, 0);
    assert_eq!(report.uptime_ratio, 1.0);
}

#[test]
fn compliance_report_counts_match_an_independent_file_scan() {
    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);
    deploy(&mut node, &bandwidth_sla("sla_bw"), 1_600);

    // 10 samples, 2 breaching, with recovery in between so each breach is a
    // fresh Compliant -> Violated transition.
    let values = [120, 130, 80, 125, 110, 105, 70, 140, 115, 150];
    for (i, v) in values.iter().enumerate() {
        node.record_metric(&sample("sla_bw", "bandwidth", *v, 2_000 + i as u64)).unwrap();
    }
    let report = node.compliance_report("sla_bw", None).unwrap();
    assert_eq!(report.sample_count, 10);
    assert_eq!(report.breach_count, 2);
    assert_eq!(report.violation_count, 2);
    assert_eq!(report.uptime_ratio, 0.8);

    // Independent oracle: scan the raw ledger file.
    let raw = std::fs::read(node.ledger().path()).unwrap();
    let mut samples = 0u64;
    let mut violations = 0u64;
    for line in raw.split(|b| *b == b'\n').filter(|l| !l.is_empty()) {
        let block: serde_json::Value = serde_json::from_slice(line).unwrap();
        for tx in block["txs"].as_array().unwrap() {
            let kind = tx["kind"].as_str().unwrap();
            if kind != "MetricRecorded" && kind != "ViolationRaised" {
                continue;
            }
            let payload_b64 = tx["payload_b64"].as_str().unwrap();
            let payload: serde_json::Value = serde_json::from_slice(
                &base64_decode(payload_b64),
            )
            .unwrap();
            if payload["agreement_id"] == "sla_bw" {
                match kind {
                    "MetricRecorded" => samples += 1,
                    "ViolationRaised" => violations += 1,
                    _ => unreachable!(),
                }
            }
        }
    }
    assert_eq!(samples, report.sample_count);
    assert_eq!(violations, report.violation_count);
}

// Minimal strict base64 decoder for the test-side oracle, kept independent
// of the implementation path it checks.
fn base64_decode(s: &str) -> Vec<u8> {
    const ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    let index = |c: u8| ALPHABET.iter().position(|a| *a == c).unwrap() as u32;
    let stripped: Vec<u8> = s.bytes().filter(|c| *c != b'=').collect();
    let mut out = Vec::new();
    for chunk in stripped.chunks(4) {
        let mut acc = 0u32;
        for (i, c) in chunk.iter().enumerate() {
            acc |= index(*c) << (18 - 6 * i);
        }
        let bytes = [(acc >> 16) as u8, (acc >> 8) as u8, acc as u8];
        out.extend_from_slice(&bytes[..chunk.len() - 1]);
    }
    out
}

#[test]
fn empty_range_report_is_empty() {
    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);
    deploy(&mut node, &bandwidth_sla("sla_bw"), 1_600);
    node.record_metric(&sample("sla_bw", "bandwidth", 120, 2_000)).unwrap();
    let report = node.compliance_report("sla_bw", Some((5, 4))).unwrap();
    assert_eq!(report.sample_count, 0);
    assert_eq!(report.violation_count, 0);
}

#[test]
fn unknown_agreement_report_is_rejected() {
    let dir = TempDir::new().unwrap();
    let node = standard_fixture(&dir);
    assert!(matches!(
        node.compliance_report("ghost", None),
        Err(AgreementError::UnknownAgreement(_))
    ));
}

/// Exactly-once violation latching over a windowed stream.
#[test]
fn one_violation_per_compliant_to_violated_transition() {
    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);
    let mut spec = bandwidth_sla("sla_w3");
    spec.metrics[0].window = 3;
    deploy(&mut node, &spec, 1_600);

    // window 3: breach at 80 raises once, stays latched while the breach
    // remains in the window, recovers after three compliant samples, then a
    // second breach raises again.
    let stream: [(i64, EvaluationStatus, bool); 8] = [
        (120, EvaluationStatus::Compliant, false),
        (80, EvaluationStatus::Violated, true),
        (80, EvaluationStatus::Violated, false),
        (120, EvaluationStatus::Violated, false),
        (120, EvaluationStatus::Violated, false),
        (120, EvaluationStatus::Compliant, false),
        (90, EvaluationStatus::Violated, true),
        (95, EvaluationStatus::Violated, false),
    ];
    let mut transitions = 0;
    for (i, (value, expected_status, expected_raise)) in stream.iter().enumerate() {
        let result = node
            .record_metric(&sample("sla_w3", "bandwidth", *value, 2_000 + i as u64))
            .unwrap();
        assert_eq!(result.status, *expected_status, "step {i}");
        assert_eq!(result.newly_raised, *expected_raise, "step {i}");
        if *expected_raise {
            transitions += 1;
        }
    }
    let raised = node.ledger().query(&TxFilter::kind(TxKind::ViolationRaised)).len();
    assert_eq!(raised, transitions);
    assert_eq!(raised, 2);
}

#[test]
fn replaying_a_stream_reproduces_identical_digests() {
    let run = || {
        let dir = TempDir::new().unwrap();
        let mut node = standard_fixture(&dir);
        deploy(&mut node, &bandwidth_sla("sla_bw"), 1_600);
        for (i, v) in [120, 80, 80, 130, 70].iter().enumerate() {
            node.record_metric(&sample("sla_bw", "bandwidth", *v, 2_000 + i as u64)).unwrap();
        }
        node.ledger().iter_txs().map(|tx| tx.digest()).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn samples_outside_validity_window_are_rejected() {
    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);
    deploy(&mut node, &bandwidth_sla("sla_bw"), 1_600);
    let err = node.record_metric(&sample("sla_bw", "bandwidth", 120, 100)).unwrap_err();
    assert!(matches!(err, AgreementError::InactiveAgreement { .. }));
    let err = node
        .record_metric(&sample("sla_bw", "bandwidth", 120, 2_000_000))
        .unwrap_err();
    assert!(matches!(err, AgreementError::InactiveAgreement { .. }));
}

#[test]
fn suspend_action_deactivates_the_agreement() {
    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);
    let mut spec = bandwidth_sla("sla_susp");
    spec.actions_on_violation = vec![Action::SuspendAgreement, Action::NotifyParty("company_x".into())];
    deploy(&mut node, &spec, 1_600);

    node.record_metric(&sample("sla_susp", "bandwidth", 80, 2_000)).unwrap();
    assert_eq!(node.ledger().query(&TxFilter::kind(TxKind::ActionTriggered)).len(), 2);

    let err = node.record_metric(&sample("sla_susp", "bandwidth", 120, 2_001)).unwrap_err();
    assert!(matches!(err, AgreementError::InactiveAgreement { .. }));
}

#[test]
fn unauthorized_origin_is_rejected() {
    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);
    deploy(&mut node, &bandwidth_sla("sla_bw"), 1_600);
    let mut s = sample("sla_bw", "bandwidth", 120, 2_000);
    s.origin = "company_z".into();
    let err = node.record_metric(&s).unwrap_err();
    assert!(matches!(err, AgreementError::UnauthorizedOrigin { .. }));
}

#[test]
fn sensor_sourced_metric_is_authored_by_the_gateway() {
    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);
    let mut spec = bandwidth_sla("sla_temp");
    spec.metrics = vec![MetricSpec {
        name: "temperature".into(),
        unit: "dC".into(),
        scale_exponent: -1,
        comparator: Comparator::Le,
        threshold_lo: 800,
        threshold_hi: 800,
        window: 1,
        source: "gw_7".into(),
    }];
    deploy(&mut node, &spec, 1_600);

    let mut s = sample("sla_temp", "temperature", 400, 2_000);
    s.origin = "temp_01".into();
    node.record_metric(&s).unwrap();
    let recorded = node.ledger().query(&TxFilter::kind(TxKind::MetricRecorded));
    assert_eq!(recorded.last().unwrap().author, "gw_7");

    // A sensor bound to a different gateway is not an authorized origin.
    register(&mut node, "gw_9", agreechain::identity::IdentityKind::Gateway, &[], None, 8, 1_007);
    register(
        &mut node,
        "temp_02",
        agreechain::identity::IdentityKind::Sensor,
        &[],
        Some("gw_9"),
        9,
        1_008,
    );
    let mut foreign = sample("sla_temp", "temperature", 400, 2_001);
    foreign.origin = "temp_02".into();
    assert!(matches!(
        node.record_metric(&foreign),
        Err(AgreementError::UnauthorizedOrigin { .. })
    ));
}

#[test]
fn spec_digest_is_order_sensitive_but_stable() {
    let spec = bandwidth_sla("sla_bw");
    assert_eq!(spec_digest(&spec).unwrap(), spec_digest(&spec.clone()).unwrap());
    let mut reordered = spec.clone();
    reordered.parties.reverse();
    assert_ne!(spec_digest(&spec).unwrap(), spec_digest(&reordered).unwrap());
}

#[test]
fn shape_validation_rejects_bad_specs() {
    let dir = TempDir::new().unwrap();
    let mut node = standard_fixture(&dir);

    let mut no_metrics = bandwidth_sla("bad_1");
    no_metrics.metrics.clear();
    let sigs = sign_all(&node, &no_metrics);
    assert!(matches!(
        node.deploy_agreement(&no_metrics, &sigs, 1_600),
        Err(AgreementError::ValidationFailed(SpecIssue::EmptyMetrics))
    ));

    let mut one_party = bandwidth_sla("bad_2");
    one_party.parties = vec!["company_z".into()];
    let sigs = sign_all(&node, &one_party);
    assert!(matches!(
        node.deploy_agreement(&one_party, &sigs, 1_600),
        Err(AgreementError::ValidationFailed(SpecIssue::TooFewParties))
    ));

    let mut bad_validity = bandwidth_sla("bad_3");
    bad_validity.valid_from = bad_validity.valid_to;
    let sigs = sign_all(&node, &bad_validity);
    assert!(matches!(
        node.deploy_agreement(&bad_validity, &sigs, 1_600),
        Err(AgreementError::ValidationFailed(SpecIssue::EmptyValidity))
    ));

    let mut stranger_notify = bandwidth_sla("bad_4");
    stranger_notify.actions_on_violation = vec![Action::NotifyParty("root".into())];
    let sigs = sign_all(&node, &stranger_notify);
    assert!(matches!(
        node.deploy_agreement(&stranger_notify, &sigs, 1_600),
        Err(AgreementError::ValidationFailed(SpecIssue::NotifyTargetNotParty(_)))
    ));
}
