//! Property tests for the pure kernels: canonical encoding, comparator
//! semantics, and the closed-form success probability.

use agreechain::agreements::Comparator;
use agreechain::canonical::{canonical_digest, to_canonical_string};
use agreechain::simulator::exact_success_probability;
use proptest::prelude::*;

fn json_value() -> impl Strategy<Value = serde_json::Value> {
    let leaf = prop_oneof![
        Just(serde_json::Value::Null),
        any::<bool>().prop_map(serde_json::Value::from),
        any::<i64>().prop_map(serde_json::Value::from),
        "[a-z_]{0,12}".prop_map(serde_json::Value::from),
    ];
    leaf.prop_recursive(3, 24, 6, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..6).prop_map(serde_json::Value::from),
            prop::collection::btree_map("[a-z_]{1,8}", inner, 0..6).prop_map(|m| {
                serde_json::Value::Object(m.into_iter().collect())
            }),
        ]
    })
}

proptest! {
    /// Canonical output round-trips through a plain JSON parser.
    #[test]
    fn canonical_roundtrips(value in json_value()) {
        let canon = to_canonical_string(&value).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&canon).unwrap();
        prop_assert_eq!(&parsed, &value);
        // Re-encoding the parse reproduces the same bytes.
        prop_assert_eq!(to_canonical_string(&parsed).unwrap(), canon);
    }

    /// Digests ignore map insertion order.
    #[test]
    fn digest_is_insertion_order_independent(
        map in prop::collection::btree_map("[a-z]{1,8}", any::<i64>(), 1..8)
    ) {
        let pairs: Vec<(String, i64)> = map.into_iter().collect();
        let forward: serde_json::Map<String, serde_json::Value> = pairs
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::from(*v)))
            .collect();
        let reversed: serde_json::Map<String, serde_json::Value> = pairs
            .iter()
            .rev()
            .map(|(k, v)| (k.clone(), serde_json::Value::from(*v)))
            .collect();
        prop_assert_eq!(
            canonical_digest(&serde_json::Value::Object(forward)).unwrap(),
            canonical_digest(&serde_json::Value::Object(reversed)).unwrap()
        );
    }

    /// Comparator verdicts match an independently written arithmetic oracle.
    #[test]
    fn comparator_matches_brute_force(
        value in -1_000i64..1_000,
        lo in -1_000i64..1_000,
        span in 0i64..500,
    ) {
        let hi = lo + span;
        // Oracle: breach means the compliance predicate fails.
        let complies_ge = value >= lo;
        let complies_le = value <= lo;
        let complies_eq = value == lo;
        let complies_rng = lo <= value && value <= hi;
        prop_assert_eq!(Comparator::Ge.breaches(value, lo, lo), !complies_ge);
        prop_assert_eq!(Comparator::Le.breaches(value, lo, lo), !complies_le);
        prop_assert_eq!(Comparator::Eq.breaches(value, lo, lo), !complies_eq);
        prop_assert_eq!(Comparator::InRange.breaches(value, lo, hi), !complies_rng);
    }

    /// Closed form equals exhaustive outcome enumeration for up to 6 modes.
    #[test]
    fn closed_form_matches_enumeration(
        probs in prop::collection::vec(0.0f64..=1.0, 1..=6)
    ) {
        let k = probs.len();
        let mut success = 0.0f64;
        let mut total = 0.0f64;
        for outcome in 0u32..(1 << k) {
            let mut p = 1.0f64;
            for (i, prob) in probs.iter().enumerate() {
                p *= if outcome & (1 << i) != 0 { *prob } else { 1.0 - prob };
            }
            total += p;
            if outcome == 0 {
                success = p;
            }
        }
        prop_assert!((total - 1.0).abs() < 1e-9);
        let closed = exact_success_probability(&probs);
        prop_assert!((closed - success).abs() <= f64::EPSILON * k as f64);
    }
}
