//! The threshold-evaluation circuit.
//!
//! Private inputs: the six scaled metrics and a salt. Public inputs: the task
//! type and five thresholds. Public outputs: the pass/fail bit, the metric
//! commitment and the nullifier. The pass/fail bit is an output rather than a
//! constraint, so a failing molecule still yields a valid proof (of failure).

mod analyze;
mod builder;
mod gadgets;
mod native;
mod r1cs;

use std::sync::OnceLock;

use crate::data_processor::{MetricVector, TaskType, ThresholdSet, METRIC_BOUND};
use crate::field_poseidon::FieldElement;
use crate::SCALE;

pub use analyze::{analyze, ComponentShare, ConstraintReport};
pub use native::{commitment, eval_native, nullifier};
pub use r1cs::{Component, Constraint, ConstraintSystem, LinearCombination, Unsatisfied, Witness};

use builder::{Builder, Num};
use gadgets::{boolean, geq, is_equal_const, mul, poseidon, range_check, select};

/// Wire indices of the circuit's fixed interface.
pub mod layout {
    pub const ONE: usize = 0;
    pub const PUBLIC_START: usize = 1;
    pub const TASK_TYPE: usize = 1;
    /// `[θ_safe, θ_qed, θ_sas, θ_lip, θ_sim]`
    pub const THRESHOLDS: [usize; 5] = [2, 3, 4, 5, 6];
    pub const RESULT: usize = 7;
    pub const COMMITMENT: usize = 8;
    pub const NULLIFIER: usize = 9;
    pub const PRIVATE_START: usize = 10;
    /// `[valid, safe, qed, sas, lip, sim]`
    pub const METRICS: [usize; 6] = [10, 11, 12, 13, 14, 15];
    pub const SALT: usize = 16;

    pub const NUM_PUBLIC_INPUTS: usize = 6;
    pub const NUM_PUBLIC_OUTPUTS: usize = 3;
    pub const NUM_PRIVATE_INPUTS: usize = 7;
    pub const NUM_PUBLIC_VALUES: usize = NUM_PUBLIC_INPUTS + NUM_PUBLIC_OUTPUTS;
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthesisError {
    #[error("threshold {metric} = {value} does not fit in 32 bits")]
    ThresholdOutOfRange { metric: String, value: u64 },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WitnessError {
    #[error("metric {metric} = {value} does not fit in 32 bits")]
    Overflow { metric: &'static str, value: u64 },
    #[error(transparent)]
    Threshold(#[from] SynthesisError),
}

/// Typed circuit inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircuitInputs {
    pub metrics: MetricVector,
    pub salt: FieldElement,
    pub task: TaskType,
    pub thresholds: ThresholdSet,
}

impl CircuitInputs {
    /// `[t, θ_safe, θ_qed, θ_sas, θ_lip, θ_sim]`
    pub fn public_inputs(&self) -> [FieldElement; 6] {
        let th = self.thresholds.to_array();
        [
            FieldElement::from_u64(self.task.encoding()),
            th[0].into(),
            th[1].into(),
            th[2].into(),
            th[3].into(),
            th[4].into(),
        ]
    }

    /// `[valid, safe, qed, sas, lip, sim, salt]`
    pub fn private_inputs(&self) -> [FieldElement; 7] {
        let m = self.metrics.to_array();
        [
            m[0].into(),
            m[1].into(),
            m[2].into(),
            m[3].into(),
            m[4].into(),
            m[5].into(),
            self.salt,
        ]
    }
}

/// Untyped field-level inputs, for exercising the circuit with values the
/// typed API refuses (task type 2, metrics at or above 2^32).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawAssignment {
    pub public_inputs: [FieldElement; 6],
    pub private_inputs: [FieldElement; 7],
}

impl From<&CircuitInputs> for RawAssignment {
    fn from(c: &CircuitInputs) -> Self {
        Self {
            public_inputs: c.public_inputs(),
            private_inputs: c.private_inputs(),
        }
    }
}

fn build(b: &mut Builder, raw: Option<&RawAssignment>) {
    let pub_in = |i: usize| raw.map(|r| r.public_inputs[i]);
    let priv_in = |i: usize| raw.map(|r| r.private_inputs[i]);

    // Allocation order fixes the wire layout.
    let t = b.alloc(pub_in(0));
    let theta: Vec<Num> = (1..6).map(|i| b.alloc(pub_in(i))).collect();
    // Output wires are filled in once their values are known.
    for _ in 0..layout::NUM_PUBLIC_OUTPUTS {
        b.alloc(raw.map(|_| FieldElement::zero()));
    }
    let v: Vec<Num> = (0..6).map(|i| b.alloc(priv_in(i))).collect();
    let salt = b.alloc(priv_in(6));
    let [valid, safe, qed, sas, lip, sim] = &v[..] else {
        unreachable!()
    };
    let [th_safe, th_qed, th_sas, th_lip, th_sim] = &theta[..] else {
        unreachable!()
    };

    b.set_label(Component::Validity);
    boolean(b, valid);
    range_check(b, valid);

    b.set_label(Component::Glue);
    boolean(b, &t);

    b.set_label(Component::Safety);
    range_check(b, th_safe);
    range_check(b, safe);
    let safe_eq = is_equal_const(b, safe, FieldElement::from_u64(SCALE));
    let safe_geq = geq(b, safe, th_safe);
    let check_safe = select(b, &t, &safe_geq, &safe_eq);

    b.set_label(Component::Qed);
    range_check(b, th_qed);
    range_check(b, qed);
    let check_qed = geq(b, qed, th_qed);

    b.set_label(Component::Sas);
    range_check(b, th_sas);
    range_check(b, sas);
    let check_sas = geq(b, th_sas, sas);

    b.set_label(Component::Lipinski);
    range_check(b, th_lip);
    range_check(b, lip);
    let check_lip = geq(b, th_lip, lip);

    b.set_label(Component::Similarity);
    range_check(b, th_sim);
    range_check(b, sim);
    let check_sim = geq(b, sim, th_sim);

    b.set_label(Component::Glue);
    let mut acc = valid.clone();
    for check in [&check_safe, &check_qed, &check_sas, &check_lip] {
        acc = mul(b, &acc, check);
    }
    b.assign(
        layout::RESULT,
        acc.value().zip(check_sim.value()).map(|(a, s)| a * s),
    );
    let result = b.wire(layout::RESULT);
    b.enforce(&acc, &check_sim, &result);

    b.set_label(Component::Hash);
    let one = b.one();
    let mut preimage = v.clone();
    preimage.push(salt);
    let c = poseidon(b, &preimage);
    b.assign(layout::COMMITMENT, c.value());
    let commitment_wire = b.wire(layout::COMMITMENT);
    b.enforce(&c, &one, &commitment_wire);

    let n = poseidon(b, &[commitment_wire, t]);
    b.assign(layout::NULLIFIER, n.value());
    let nullifier_wire = b.wire(layout::NULLIFIER);
    b.enforce(&n, &one, &nullifier_wire);
}

/// The canonical constraint system. Its shape does not depend on thresholds
/// or task type, which are public inputs.
pub fn eval_circuit() -> &'static ConstraintSystem {
    static CS: OnceLock<ConstraintSystem> = OnceLock::new();
    CS.get_or_init(|| {
        let mut b = Builder::shape();
        build(&mut b, None);
        b.finish_shape()
    })
}

fn check_thresholds(theta: &ThresholdSet) -> Result<(), SynthesisError> {
    match theta.out_of_range() {
        Some((metric, value)) => Err(SynthesisError::ThresholdOutOfRange {
            metric: format!("{metric:?}").to_lowercase(),
            value,
        }),
        None => Ok(()),
    }
}

/// Builds the constraint system for proving against `theta` under task `t`.
///
/// Thresholds and task type are public inputs, so every valid `(theta, t)`
/// yields the same system; this only rejects thresholds the 32-bit
/// comparators cannot represent.
pub fn synthesize(theta: &ThresholdSet, _t: TaskType) -> Result<ConstraintSystem, SynthesisError> {
    check_thresholds(theta)?;
    Ok(eval_circuit().clone())
}

/// Full wire assignment for the given inputs.
pub fn compute_witness(
    v: &MetricVector,
    salt: FieldElement,
    theta: &ThresholdSet,
    t: TaskType,
) -> Result<Witness, WitnessError> {
    for (metric, value) in MetricVector::FIELD_NAMES.iter().zip(v.to_array()) {
        if value >= METRIC_BOUND {
            return Err(WitnessError::Overflow { metric, value });
        }
    }
    check_thresholds(theta)?;
    let inputs = CircuitInputs {
        metrics: *v,
        salt,
        task: t,
        thresholds: *theta,
    };
    Ok(assign_unchecked(&RawAssignment::from(&inputs)))
}

/// Runs the witness generator on arbitrary field inputs without range
/// checks. The result may not satisfy the system.
pub fn assign_unchecked(raw: &RawAssignment) -> Witness {
    let mut b = Builder::witness();
    build(&mut b, Some(raw));
    Witness::from_values(b.finish_values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn best() -> MetricVector {
        MetricVector {
            valid: 1,
            safe: SCALE,
            qed: SCALE,
            sas: SCALE,
            lip: 0,
            sim: SCALE,
        }
    }

    #[test]
    fn interface_arity() {
        let cs = eval_circuit();
        assert_eq!(cs.num_public_inputs(), 6);
        assert_eq!(cs.num_private_inputs(), 7);
        assert_eq!(cs.num_public_outputs(), 3);
        assert_eq!(cs.labels().len(), cs.num_constraints());
    }

    #[test]
    fn constraints_reference_allocated_wires() {
        let cs = eval_circuit();
        for c in cs.constraints() {
            for lc in [&c.a, &c.b, &c.c] {
                assert!(lc.wires().all(|w| w < cs.num_wires()));
            }
        }
    }

    #[test]
    fn synthesize_is_deterministic() {
        let theta = ThresholdSet::defaults(TaskType::Binary);
        let a = synthesize(&theta, TaskType::Binary).unwrap();
        let mut b = Builder::shape();
        build(&mut b, None);
        let b = b.finish_shape();
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn synthesize_rejects_wide_threshold() {
        let theta = ThresholdSet {
            sas: 1 << 32,
            ..ThresholdSet::defaults(TaskType::Binary)
        };
        assert!(matches!(
            synthesize(&theta, TaskType::Binary),
            Err(SynthesisError::ThresholdOutOfRange { .. })
        ));
    }

    #[test]
    fn witness_layout_matches_shape() {
        let t = TaskType::Regression;
        let w = compute_witness(&best(), 7u64.into(), &ThresholdSet::defaults(t), t).unwrap();
        assert_eq!(w.len(), eval_circuit().num_wires());
        eval_circuit().is_satisfied(&w).unwrap();
        assert!(w.passed());
        assert_eq!(w.public_values().len(), 9);
    }

    #[test]
    fn overflow_rejected() {
        let t = TaskType::Binary;
        let v = MetricVector {
            sas: 1 << 32,
            ..best()
        };
        assert_eq!(
            compute_witness(&v, FieldElement::one(), &ThresholdSet::defaults(t), t),
            Err(WitnessError::Overflow {
                metric: "sas",
                value: 1 << 32
            })
        );
    }

    #[test]
    fn failing_vector_gives_satisfiable_zero_result() {
        let t = TaskType::Binary;
        let v = MetricVector {
            sim: 100_000,
            ..best()
        };
        let w = compute_witness(&v, FieldElement::one(), &ThresholdSet::defaults(t), t).unwrap();
        eval_circuit().is_satisfied(&w).unwrap();
        assert_eq!(w.result(), FieldElement::zero());
    }

    #[test]
    fn flipped_result_is_unsatisfiable() {
        let t = TaskType::Binary;
        let v = MetricVector { qed: 10, ..best() };
        let mut w =
            compute_witness(&v, FieldElement::one(), &ThresholdSet::defaults(t), t).unwrap();
        w.set_wire(layout::RESULT, FieldElement::one());
        assert!(matches!(
            eval_circuit().is_satisfied(&w),
            Err(Unsatisfied::Constraint {
                component: Component::Glue,
                ..
            })
        ));
    }

    #[test]
    fn task_type_two_is_unsatisfiable() {
        let t = TaskType::Binary;
        let inputs = CircuitInputs {
            metrics: best(),
            salt: 3u64.into(),
            task: t,
            thresholds: ThresholdSet::defaults(t),
        };
        let mut raw = RawAssignment::from(&inputs);
        raw.public_inputs[0] = 2u64.into();
        assert!(eval_circuit()
            .is_satisfied(&assign_unchecked(&raw))
            .is_err());
    }

    #[test]
    fn unchecked_overflow_is_unsatisfiable() {
        let t = TaskType::Binary;
        let inputs = CircuitInputs {
            metrics: best(),
            salt: 3u64.into(),
            task: t,
            thresholds: ThresholdSet::defaults(t),
        };
        let mut raw = RawAssignment::from(&inputs);
        // 2^32 + 10^6 wraps to 10^6 in the low 32 bits.
        raw.private_inputs[3] = FieldElement::from_u64((1 << 32) + SCALE);
        assert!(eval_circuit()
            .is_satisfied(&assign_unchecked(&raw))
            .is_err());
    }

    #[test]
    fn output_wires_match_native_functions() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..20 {
            let v = MetricVector {
                valid: rng.gen_range(0..2),
                safe: rng.gen_range(0..=SCALE),
                qed: rng.gen_range(0..=SCALE),
                sas: rng.gen_range(SCALE..=10 * SCALE),
                lip: rng.gen_range(0..5) * SCALE,
                sim: rng.gen_range(0..=SCALE),
            };
            let t = if rng.gen() {
                TaskType::Binary
            } else {
                TaskType::Regression
            };
            let theta = ThresholdSet::defaults(t);
            let s = FieldElement::random(&mut rng);
            let w = compute_witness(&v, s, &theta, t).unwrap();
            eval_circuit().is_satisfied(&w).unwrap();
            assert_eq!(w.commitment(), commitment(&v, s));
            assert_eq!(w.nullifier(), nullifier(w.commitment(), t));
            assert_eq!(w.passed(), eval_native(&v, &theta, t));
        }
    }
}
