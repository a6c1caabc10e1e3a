//! Fixtures shared by the criterion benchmarks.

use molproof_core::pipeline::{Keys, SyntheticCorpus};
use molproof_core::snark::prove;
use molproof_core::{
    compute_witness, EvaluationRecord, FieldElement, MetricVector, Proof, TaskType, ThresholdSet,
    Witness, SCALE,
};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Keys plus one passing witness and its proof.
pub struct Fixture {
    pub keys: Keys,
    pub metrics: MetricVector,
    pub task: TaskType,
    pub thresholds: ThresholdSet,
    pub salt: FieldElement,
    pub witness: Witness,
    pub proof: Proof,
    pub rng: ChaCha20Rng,
}

impl Fixture {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let keys = Keys::generate(&mut rng).expect("setup");
        let task = TaskType::Regression;
        let thresholds = ThresholdSet::defaults(task);
        let metrics = MetricVector {
            valid: 1,
            safe: 800_000,
            qed: 700_000,
            sas: 3 * SCALE,
            lip: 0,
            sim: 550_000,
        };
        let salt = FieldElement::random(&mut rng);
        let witness = compute_witness(&metrics, salt, &thresholds, task).expect("in range");
        let proof = prove(&keys.pk, &witness, &mut rng).expect("satisfied");
        Self {
            keys,
            metrics,
            task,
            thresholds,
            salt,
            witness,
            proof,
            rng,
        }
    }
}

/// Synthetic records meeting every default threshold.
pub fn passing_corpus(n: usize, seed: u64) -> Vec<EvaluationRecord> {
    SyntheticCorpus::new(seed).passing(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use molproof_core::snark::verify;

    #[test]
    fn fixture_proof_verifies() {
        let f = Fixture::new(1);
        assert!(f.witness.passed());
        assert!(verify(&f.keys.vk, &f.witness.public_values(), &f.proof).unwrap());
        assert_eq!(passing_corpus(4, 2).len(), 4);
    }
}
