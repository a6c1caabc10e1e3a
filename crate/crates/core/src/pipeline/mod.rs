//! End-to-end runtime: normalize, precheck, salt, witness, prove, verify,
//! then the nullifier check.

mod batch;
mod bench;
mod corpus;
mod security;

use std::time::Instant;

use rand::{CryptoRng, RngCore};
use serde::Serialize;

use crate::circuit::{compute_witness, eval_circuit, WitnessError};
use crate::data_processor::{
    normalize, precheck, EvaluationRecord, MetricVector, NormalizeError, ThresholdProfile,
};
use crate::field_poseidon::FieldElement;
use crate::nullifier_registry::{InsertOutcome, NullifierSet, RegistryError};
use crate::snark::{self, ProofBundle, ProvingKey, SnarkError, VerifyingKey};

pub use batch::{
    peak_memory_kib, run_batch, BatchOptions, MoleculeReport, MoleculeStatus, RunReport,
};
pub use bench::{bench, bench_corpus, BenchOptions, BenchReport, BenchRow, BenchRun};
pub use corpus::{SyntheticCorpus, INVALID_SMILES, VALID_SMILES};
pub use security::{
    security_suite, AttackResult, AttackScenario, SecurityConfig, SecurityCorpus, SecurityError,
    SecurityReport, SoundnessSection, Tally, ZeroKnowledgeSection,
};

/// A matched proving/verifying key pair for the evaluation circuit.
#[derive(Debug, Clone)]
pub struct Keys {
    pub pk: ProvingKey,
    pub vk: VerifyingKey,
}

impl Keys {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Result<Self, SnarkError> {
        let (pk, vk) = snark::setup(eval_circuit(), rng)?;
        Ok(Self { pk, vk })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Normalize,
    Precheck,
    Salt,
    Witness,
    Prove,
    Verify,
    Nullifier,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("normalize: {0}")]
    Normalize(#[from] NormalizeError),
    #[error("precheck: {}", failed.join("; "))]
    Precheck { failed: Vec<String> },
    #[error("witness: {0}")]
    Witness(#[from] WitnessError),
    #[error("prove: {0}")]
    Prove(#[source] SnarkError),
    #[error("verify: {0}")]
    Verify(#[source] SnarkError),
    #[error("nullifier: {0}")]
    Registry(#[from] RegistryError),
}

impl PipelineError {
    pub fn phase(&self) -> Phase {
        match self {
            PipelineError::Normalize(_) => Phase::Normalize,
            PipelineError::Precheck { .. } => Phase::Precheck,
            PipelineError::Witness(_) => Phase::Witness,
            PipelineError::Prove(_) => Phase::Prove,
            PipelineError::Verify(_) => Phase::Verify,
            PipelineError::Registry(_) => Phase::Nullifier,
        }
    }

    /// The record itself is unusable, as opposed to a runtime failure.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            PipelineError::Normalize(_)
                | PipelineError::Precheck { .. }
                | PipelineError::Witness(_)
        )
    }
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub normalize: f64,
    pub precheck: f64,
    pub salt: f64,
    pub witness: f64,
    pub prove: f64,
    pub verify: f64,
    pub nullifier: f64,
}

impl PhaseTimings {
    pub fn total(&self) -> f64 {
        self.normalize
            + self.precheck
            + self.salt
            + self.witness
            + self.prove
            + self.verify
            + self.nullifier
    }

    pub fn add(&mut self, other: &PhaseTimings) {
        self.normalize += other.normalize;
        self.precheck += other.precheck;
        self.salt += other.salt;
        self.witness += other.witness;
        self.prove += other.prove;
        self.verify += other.verify;
        self.nullifier += other.nullifier;
    }

    pub fn scaled(&self, k: f64) -> PhaseTimings {
        PhaseTimings {
            normalize: self.normalize * k,
            precheck: self.precheck * k,
            salt: self.salt * k,
            witness: self.witness * k,
            prove: self.prove * k,
            verify: self.verify * k,
            nullifier: self.nullifier * k,
        }
    }
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    *slot += start.elapsed().as_secs_f64();
    out
}

/// A proof produced and checked, before the registry has seen it.
#[derive(Debug, Clone)]
pub struct ProvedRecord {
    pub metrics: MetricVector,
    pub bundle: ProofBundle,
    pub proof_valid: bool,
    pub warnings: Vec<String>,
    pub timings: PhaseTimings,
}

#[derive(Debug, Clone)]
pub struct SingleOutcome {
    /// Validity bit set, proof verified, result slot 1 and nullifier fresh.
    pub accepted: bool,
    pub proof_valid: bool,
    /// `None` when the proof did not verify and the registry was not consulted.
    pub nullifier_status: Option<InsertOutcome>,
    pub metrics: MetricVector,
    pub bundle: ProofBundle,
    pub warnings: Vec<String>,
    pub timings: PhaseTimings,
}

/// The registry-free part of the pipeline. With `salt = None` a salt is drawn
/// uniformly from the field.
pub fn prove_record<R: RngCore + CryptoRng>(
    record: &EvaluationRecord,
    keys: &Keys,
    profile: &ThresholdProfile,
    salt: Option<FieldElement>,
    rng: &mut R,
) -> Result<ProvedRecord, PipelineError> {
    let mut t = PhaseTimings::default();
    let task = record.task_type;
    let theta = profile.for_task(task);

    let metrics = timed(&mut t.normalize, || normalize(record))?;
    let report = timed(&mut t.precheck, || precheck(&metrics, task));
    if !report.passed() {
        let failed = report
            .checks
            .iter()
            .filter(|c| c.status == crate::data_processor::CheckStatus::Fail)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        return Err(PipelineError::Precheck { failed });
    }
    let warnings = report
        .warnings()
        .map(|c| format!("{}: {}", c.name, c.detail))
        .collect();
    let salt = timed(&mut t.salt, || {
        salt.unwrap_or_else(|| FieldElement::random(rng))
    });
    let witness = timed(&mut t.witness, || {
        compute_witness(&metrics, salt, theta, task)
    })?;
    let proof = timed(&mut t.prove, || snark::prove(&keys.pk, &witness, rng))
        .map_err(PipelineError::Prove)?;
    let bundle = ProofBundle::new(
        &record.molecule_id,
        &record.task_id,
        witness.public_values(),
        proof,
    );
    let proof_valid =
        timed(&mut t.verify, || bundle.verify(&keys.vk)).map_err(PipelineError::Verify)?;
    Ok(ProvedRecord {
        metrics,
        bundle,
        proof_valid,
        warnings,
        timings: t,
    })
}

/// Consults the registry for a proved record. Nullifiers are recorded only
/// for proofs that verify, whatever their result bit.
pub fn finish_record(
    proved: ProvedRecord,
    registry: &NullifierSet,
) -> Result<SingleOutcome, PipelineError> {
    let mut t = proved.timings;
    let nullifier_status = if proved.proof_valid {
        Some(timed(&mut t.nullifier, || {
            registry.check_and_insert(proved.bundle.nullifier())
        })?)
    } else {
        None
    };
    let accepted = proved.metrics.valid == 1
        && proved.proof_valid
        && proved.bundle.passed()
        && nullifier_status == Some(InsertOutcome::Fresh);
    Ok(SingleOutcome {
        accepted,
        proof_valid: proved.proof_valid,
        nullifier_status,
        metrics: proved.metrics,
        bundle: proved.bundle,
        warnings: proved.warnings,
        timings: t,
    })
}

/// Runs one record through the whole pipeline with a fresh uniform salt.
pub fn run_single<R: RngCore + CryptoRng>(
    record: &EvaluationRecord,
    keys: &Keys,
    profile: &ThresholdProfile,
    registry: &NullifierSet,
    rng: &mut R,
) -> Result<SingleOutcome, PipelineError> {
    finish_record(prove_record(record, keys, profile, None, rng)?, registry)
}

/// As [`run_single`] with a caller-chosen salt. Resubmitting the same record
/// with the same salt reproduces the nullifier and is caught as a replay.
pub fn run_single_with_salt<R: RngCore + CryptoRng>(
    record: &EvaluationRecord,
    keys: &Keys,
    profile: &ThresholdProfile,
    registry: &NullifierSet,
    salt: FieldElement,
    rng: &mut R,
) -> Result<SingleOutcome, PipelineError> {
    finish_record(
        prove_record(record, keys, profile, Some(salt), rng)?,
        registry,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BundleVerdict {
    pub proof_valid: bool,
    pub passed: bool,
    pub nullifier_status: Option<InsertOutcome>,
    /// Proof valid, result slot 1 and nullifier fresh.
    pub accepted: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyBundleError {
    #[error(transparent)]
    Snark(#[from] SnarkError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

/// Verifier side: check a submitted bundle, then its nullifier.
pub fn verify_bundle(
    bundle: &ProofBundle,
    vk: &VerifyingKey,
    registry: &NullifierSet,
) -> Result<BundleVerdict, VerifyBundleError> {
    let proof_valid = bundle.verify(vk)?;
    let nullifier_status = if proof_valid {
        Some(registry.check_and_insert(bundle.nullifier())?)
    } else {
        None
    };
    Ok(BundleVerdict {
        proof_valid,
        passed: bundle.passed(),
        nullifier_status,
        accepted: proof_valid && bundle.passed() && nullifier_status == Some(InsertOutcome::Fresh),
    })
}

#[cfg(test)]
pub(crate) mod test_keys {
    use super::Keys;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::sync::OnceLock;

    pub fn keys() -> &'static Keys {
        static KEYS: OnceLock<Keys> = OnceLock::new();
        KEYS.get_or_init(|| Keys::generate(&mut ChaCha20Rng::seed_from_u64(42)).unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_processor::{SafetyLabel, SafetyRaw, TaskType};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use test_keys::keys;

    fn record(qed: f64) -> EvaluationRecord {
        EvaluationRecord {
            molecule_id: "m".into(),
            smiles: Some("CCO".into()),
            task_id: "ames".into(),
            task_type: TaskType::Binary,
            validity_flag: None,
            safety: SafetyRaw::Label(SafetyLabel::NonToxic),
            qed,
            sas: 2.0,
            lipinski_violations: 0,
            similarity: 0.8,
        }
    }

    #[test]
    fn passing_record_is_accepted() {
        let reg = NullifierSet::in_memory();
        let out = run_single(
            &record(0.9),
            keys(),
            &ThresholdProfile::default(),
            &reg,
            &mut ChaCha20Rng::seed_from_u64(1),
        )
        .unwrap();
        assert!(out.accepted);
        assert!(out.bundle.passed());
        assert_eq!(out.nullifier_status, Some(InsertOutcome::Fresh));
        assert!(out.timings.prove > 0.0);
    }

    #[test]
    fn failing_record_burns_nullifier() {
        let reg = NullifierSet::in_memory();
        let out = run_single(
            &record(0.1),
            keys(),
            &ThresholdProfile::default(),
            &reg,
            &mut ChaCha20Rng::seed_from_u64(2),
        )
        .unwrap();
        assert!(!out.accepted);
        assert!(out.proof_valid);
        assert!(!out.bundle.passed());
        assert!(reg.contains(&out.bundle.nullifier()));
    }

    #[test]
    fn same_salt_is_replay() {
        let reg = NullifierSet::in_memory();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let salt = FieldElement::random(&mut rng);
        let p = ThresholdProfile::default();
        let first = run_single_with_salt(&record(0.9), keys(), &p, &reg, salt, &mut rng).unwrap();
        let second = run_single_with_salt(&record(0.9), keys(), &p, &reg, salt, &mut rng).unwrap();
        assert!(first.accepted);
        assert!(!second.accepted);
        assert_eq!(second.nullifier_status, Some(InsertOutcome::Replay));
        assert!(second.bundle.passed());
    }

    #[test]
    fn bundle_replay_is_caught() {
        let prover_reg = NullifierSet::in_memory();
        let out = run_single(
            &record(0.9),
            keys(),
            &ThresholdProfile::default(),
            &prover_reg,
            &mut ChaCha20Rng::seed_from_u64(4),
        )
        .unwrap();
        let reg = NullifierSet::in_memory();
        assert!(
            verify_bundle(&out.bundle, &keys().vk, &reg)
                .unwrap()
                .accepted
        );
        let again = verify_bundle(&out.bundle, &keys().vk, &reg).unwrap();
        assert!(!again.accepted);
        assert_eq!(again.nullifier_status, Some(InsertOutcome::Replay));
    }

    #[test]
    fn precheck_failure_is_attributed() {
        let reg = NullifierSet::in_memory();
        let r = EvaluationRecord {
            sas: 0.5,
            ..record(0.9)
        };
        let err = run_single(
            &r,
            keys(),
            &ThresholdProfile::default(),
            &reg,
            &mut ChaCha20Rng::seed_from_u64(5),
        )
        .unwrap_err();
        assert_eq!(err.phase(), Phase::Precheck);
        assert!(err.is_data_error());
        assert!(reg.is_empty());
    }

    #[test]
    fn invalid_smiles_is_rejected_by_result() {
        let reg = NullifierSet::in_memory();
        let r = EvaluationRecord {
            smiles: Some("C1CC(".into()),
            ..record(0.9)
        };
        let out = run_single(
            &r,
            keys(),
            &ThresholdProfile::default(),
            &reg,
            &mut ChaCha20Rng::seed_from_u64(6),
        )
        .unwrap();
        assert_eq!(out.metrics.valid, 0);
        assert!(!out.accepted);
        assert!(!out.bundle.passed());
    }
}
