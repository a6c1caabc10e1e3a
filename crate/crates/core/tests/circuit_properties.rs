use molproof_core::circuit::{analyze, eval_circuit, layout, Component};
use molproof_core::{
    commitment, compute_witness, eval_native, nullifier, FieldElement, MetricVector, TaskType,
    ThresholdSet,
};
use proptest::prelude::*;

const BOUND: u64 = 1 << 32;

fn task() -> impl Strategy<Value = TaskType> {
    prop_oneof![Just(TaskType::Binary), Just(TaskType::Regression)]
}

fn metrics() -> impl Strategy<Value = MetricVector> {
    (0..2u64, 0..BOUND, 0..BOUND, 0..BOUND, 0..BOUND, 0..BOUND).prop_map(
        |(valid, safe, qed, sas, lip, sim)| MetricVector {
            valid,
            safe,
            qed,
            sas,
            lip,
            sim,
        },
    )
}

/// Metrics concentrated near the default thresholds, where comparisons flip.
fn near_threshold_metrics() -> impl Strategy<Value = MetricVector> {
    let around = |c: u64| (c - 3)..=(c + 3);
    (
        0..2u64,
        prop_oneof![Just(1_000_000u64), around(500_000)],
        around(500_000),
        around(6_000_000),
        around(1_000_000),
        around(400_000),
    )
        .prop_map(|(valid, safe, qed, sas, lip, sim)| MetricVector {
            valid,
            safe,
            qed,
            sas,
            lip,
            sim,
        })
}

fn thresholds() -> impl Strategy<Value = ThresholdSet> {
    (0..BOUND, 0..BOUND, 0..BOUND, 0..BOUND, 0..BOUND).prop_map(|(safe, qed, sas, lip, sim)| {
        ThresholdSet {
            safe,
            qed,
            sas,
            lip,
            sim,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn result_wire_matches_native(v in metrics(), theta in thresholds(), t in task(), salt in any::<u64>()) {
        let w = compute_witness(&v, salt.into(), &theta, t).unwrap();
        prop_assert!(eval_circuit().is_satisfied(&w).is_ok());
        prop_assert_eq!(w.passed(), eval_native(&v, &theta, t));
    }

    #[test]
    fn result_wire_matches_native_near_defaults(v in near_threshold_metrics(), t in task()) {
        let theta = ThresholdSet::defaults(t);
        let w = compute_witness(&v, FieldElement::one(), &theta, t).unwrap();
        prop_assert!(eval_circuit().is_satisfied(&w).is_ok());
        prop_assert_eq!(w.passed(), eval_native(&v, &theta, t));
    }

    #[test]
    fn outputs_bind_metrics_and_task(v in metrics(), t in task(), salt in any::<u64>()) {
        let theta = ThresholdSet::defaults(t);
        let s = FieldElement::from_u64(salt);
        let w = compute_witness(&v, s, &theta, t).unwrap();
        prop_assert_eq!(w.commitment(), commitment(&v, s));
        prop_assert_eq!(w.nullifier(), nullifier(commitment(&v, s), t));
    }

    #[test]
    fn flipping_any_public_value_breaks_satisfaction(v in metrics(), t in task(), slot in 0usize..9) {
        let theta = ThresholdSet::defaults(t);
        let mut w = compute_witness(&v, FieldElement::from_u64(3), &theta, t).unwrap();
        let wire = layout::PUBLIC_START + slot;
        w.set_wire(wire, w.get(wire) + FieldElement::one());
        prop_assert!(eval_circuit().is_satisfied(&w).is_err());
    }
}

#[test]
fn shape_profile() {
    let r = analyze(eval_circuit());
    assert_eq!(
        (r.public_inputs, r.private_inputs, r.public_outputs),
        (6, 7, 3)
    );
    assert!(
        (500..=20_000).contains(&r.total_constraints),
        "{}",
        r.total_constraints
    );
    assert!(r.share(Component::Hash) >= 0.4);
    assert!(r.independent_groups >= 1);
    assert!(r.max_level_width >= 1);
}
