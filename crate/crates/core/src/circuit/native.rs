//! Native (out-of-circuit) reference evaluation.

use crate::data_processor::{MetricVector, TaskType, ThresholdSet};
use crate::field_poseidon::{hash, FieldElement};
use crate::SCALE;

/// The threshold rule the circuit proves: validity set, safety passes for the
/// task type, QED and similarity at least their thresholds, SAS and Lipinski
/// at most theirs.
pub fn eval_native(v: &MetricVector, theta: &ThresholdSet, t: TaskType) -> bool {
    let safety = match t {
        TaskType::Binary => v.safe == SCALE,
        TaskType::Regression => v.safe >= theta.safe,
    };
    v.valid == 1
        && safety
        && v.qed >= theta.qed
        && v.sas <= theta.sas
        && v.lip <= theta.lip
        && v.sim >= theta.sim
}

/// Salted commitment `Poseidon(valid, safe, qed, sas, lip, sim, salt)`.
pub fn commitment(v: &MetricVector, salt: FieldElement) -> FieldElement {
    let mut inputs: Vec<FieldElement> = v
        .to_array()
        .iter()
        .map(|x| FieldElement::from_u64(*x))
        .collect();
    inputs.push(salt);
    hash(&inputs).expect("seven inputs")
}

/// Replay tag `Poseidon(commitment, t)`.
pub fn nullifier(commitment: FieldElement, t: TaskType) -> FieldElement {
    hash(&[commitment, FieldElement::from_u64(t.encoding())]).expect("two inputs")
}
