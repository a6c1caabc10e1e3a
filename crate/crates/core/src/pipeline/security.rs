//! Completeness, soundness, zero-knowledge and attack-resistance checks.

use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::circuit::{
    assign_unchecked, compute_witness, eval_native, layout, CircuitInputs, RawAssignment,
    WitnessError,
};
use crate::data_processor::{
    normalize, EvaluationRecord, MetricVector, TaskType, ThresholdProfile,
};
use crate::field_poseidon::FieldElement;
use crate::nullifier_registry::{InsertOutcome, NullifierSet};
use crate::snark::{self, SnarkError};
use crate::SCALE;

use super::{
    run_single, run_single_with_salt, verify_bundle, Keys, PipelineError, VerifyBundleError,
};

/// Bits in a BN254 scalar field element.
const FIELD_BITS: usize = 254;

#[derive(Debug, Clone)]
pub struct SecurityCorpus {
    /// Records expected to pass every threshold.
    pub passing: Vec<EvaluationRecord>,
    /// Records that miss a threshold or carry malformed SMILES.
    pub failing: Vec<EvaluationRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityConfig {
    pub min_passing: usize,
    pub min_failing: usize,
    pub forged_witnesses: usize,
    pub zk_samples: usize,
    /// Findings are raised when mean per-bit entropy falls below this.
    pub min_bit_entropy: f64,
    pub replay_trials: usize,
    pub seed: u64,
}

impl Default for SecurityConfig {
    fn default() -> Self {
        Self {
            min_passing: 50,
            min_failing: 60,
            forged_witnesses: 20,
            zk_samples: 20,
            min_bit_entropy: 0.9,
            replay_trials: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SecurityError {
    #[error("corpus too small: {passing} passing (need {min_passing}), {failing} failing (need {min_failing})")]
    CorpusTooSmall {
        passing: usize,
        failing: usize,
        min_passing: usize,
        min_failing: usize,
    },
    #[error("zero-knowledge samples need at least 3, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Snark(#[from] SnarkError),
    #[error(transparent)]
    VerifyBundle(#[from] VerifyBundleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub passed: usize,
    pub total: usize,
}

impl Tally {
    pub fn all(&self) -> bool {
        self.passed == self.total
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SoundnessSection {
    pub rejected: usize,
    pub total: usize,
    pub forged_rejected: usize,
    pub forged_total: usize,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroKnowledgeSection {
    pub samples: usize,
    /// Mean over the 254 commitment bits of the empirical binary entropy.
    pub mean_bit_entropy: f64,
    pub findings: Vec<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackScenario {
    Boundary,
    TypeConfusion,
    OverflowInjection,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttackResult {
    pub scenario: AttackScenario,
    pub passed: bool,
    pub trials: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecurityReport {
    pub completeness: Tally,
    pub soundness: SoundnessSection,
    pub zero_knowledge: ZeroKnowledgeSection,
    pub attack_resistance: Vec<AttackResult>,
    pub passed: bool,
}

impl SecurityReport {
    pub fn attack(&self, scenario: AttackScenario) -> Option<&AttackResult> {
        self.attack_resistance
            .iter()
            .find(|a| a.scenario == scenario)
    }
}

/// Empirical binary entropy of each bit position, averaged.
pub(crate) fn mean_bit_entropy(values: &[FieldElement]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let h = |p: f64| {
        if p <= 0.0 || p >= 1.0 {
            0.0
        } else {
            -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
        }
    };
    (0..FIELD_BITS)
        .map(|i| h(values.iter().filter(|v| v.bit(i)).count() as f64 / n))
        .sum::<f64>()
        / FIELD_BITS as f64
}

/// Flags any public output equal to a metric, or an affine function of one
/// metric across all samples.
pub(crate) fn leakage_scan(samples: &[(MetricVector, [FieldElement; 2])]) -> Vec<String> {
    let mut findings = Vec::new();
    let outputs = ["commitment", "nullifier"];
    for (m, name) in MetricVector::FIELD_NAMES.iter().enumerate() {
        for (o, out_name) in outputs.iter().enumerate() {
            let xs: Vec<FieldElement> = samples
                .iter()
                .map(|(v, _)| FieldElement::from_u64(v.to_array()[m]))
                .collect();
            let ys: Vec<FieldElement> = samples.iter().map(|(_, outs)| outs[o]).collect();
            if xs.iter().zip(&ys).any(|(x, y)| x == y) {
                findings.push(format!("{out_name} equals {name} in some sample"));
            }
            // Fit y = a x + b through the first two samples with distinct x.
            let Some(j) = (1..xs.len()).find(|&j| xs[j] != xs[0]) else {
                continue;
            };
            let a = (ys[j] - ys[0]) * (xs[j] - xs[0]).inverse().expect("distinct");
            let b = ys[0] - a * xs[0];
            let distinct_x = xs.iter().collect::<std::collections::HashSet<_>>().len();
            if distinct_x >= 3 && xs.iter().zip(&ys).all(|(x, y)| a * *x + b == *y) {
                findings.push(format!("{out_name} is an affine function of {name}"));
            }
        }
    }
    findings
}

fn check_corpus(corpus: &SecurityCorpus, cfg: &SecurityConfig) -> Result<(), SecurityError> {
    if corpus.passing.len() < cfg.min_passing || corpus.failing.len() < cfg.min_failing {
        return Err(SecurityError::CorpusTooSmall {
            passing: corpus.passing.len(),
            failing: corpus.failing.len(),
            min_passing: cfg.min_passing,
            min_failing: cfg.min_failing,
        });
    }
    if cfg.zk_samples < 3 {
        return Err(SecurityError::TooFewSamples(cfg.zk_samples));
    }
    Ok(())
}

fn completeness<R: RngCore + CryptoRng>(
    corpus: &SecurityCorpus,
    keys: &Keys,
    profile: &ThresholdProfile,
    rng: &mut R,
) -> Tally {
    let registry = NullifierSet::in_memory();
    let passed = corpus
        .passing
        .iter()
        .filter(|r| match run_single(r, keys, profile, &registry, rng) {
            Ok(out) => out.accepted && out.bundle.passed(),
            Err(e) => {
                log::warn!("completeness: {}: {e}", r.molecule_id);
                false
            }
        })
        .count();
    Tally {
        passed,
        total: corpus.passing.len(),
    }
}

fn forged_vector(i: usize) -> MetricVector {
    // Misses exactly one threshold, cycling through them.
    let mut v = MetricVector {
        valid: 1,
        safe: SCALE,
        qed: SCALE,
        sas: 2 * SCALE,
        lip: 0,
        sim: SCALE,
    };
    match i % 6 {
        0 => v.valid = 0,
        1 => v.safe = 0,
        2 => v.qed = SCALE / 2 - 1,
        3 => v.sas = 6 * SCALE + 1,
        4 => v.lip = 2 * SCALE,
        _ => v.sim = 4 * SCALE / 10 - 1,
    }
    v
}

fn soundness<R: RngCore + CryptoRng>(
    corpus: &SecurityCorpus,
    keys: &Keys,
    profile: &ThresholdProfile,
    forged: usize,
    rng: &mut R,
) -> Result<SoundnessSection, SecurityError> {
    let registry = NullifierSet::in_memory();
    let mut failures = Vec::new();
    let mut rejected = 0;
    for r in &corpus.failing {
        match run_single(r, keys, profile, &registry, rng) {
            Ok(out) if !out.accepted && !out.bundle.passed() => rejected += 1,
            Ok(_) => failures.push(format!("{} produced an accepting bundle", r.molecule_id)),
            Err(e) if e.is_data_error() => rejected += 1,
            Err(e) => return Err(e.into()),
        }
    }

    // Forgery: flip the result wire of an honest failing witness. Proving must
    // refuse, and the honest proof must not verify against result 1.
    let mut forged_rejected = 0;
    let task = TaskType::Binary;
    let theta = profile.for_task(task);
    for i in 0..forged {
        let v = forged_vector(i);
        let salt = FieldElement::random(rng);
        let honest = compute_witness(&v, salt, theta, task).map_err(PipelineError::from)?;
        let mut w = honest.clone();
        w.set_wire(layout::RESULT, FieldElement::one());
        let prove_refused = matches!(
            snark::prove(&keys.pk, &w, rng),
            Err(SnarkError::Unsatisfied(_))
        );
        let proof = snark::prove(&keys.pk, &honest, rng)?;
        let mut public = honest.public_values();
        public[layout::RESULT - layout::PUBLIC_START] = FieldElement::one();
        let verify_refused = !snark::verify(&keys.vk, &public, &proof)?;
        if prove_refused && verify_refused {
            forged_rejected += 1;
        } else {
            failures.push(format!("forged witness {i} was not refused"));
        }
    }
    Ok(SoundnessSection {
        rejected,
        total: corpus.failing.len(),
        forged_rejected,
        forged_total: forged,
        failures,
    })
}

fn zero_knowledge<R: RngCore + CryptoRng>(
    corpus: &SecurityCorpus,
    profile: &ThresholdProfile,
    cfg: &SecurityConfig,
    rng: &mut R,
) -> Result<ZeroKnowledgeSection, SecurityError> {
    let mut findings = Vec::new();
    let base = &corpus.passing[0];
    let v = normalize(base).map_err(PipelineError::from)?;
    let task = base.task_type;
    let theta = profile.for_task(task);

    let mut fixed = Vec::with_capacity(cfg.zk_samples);
    for _ in 0..cfg.zk_samples {
        let w = compute_witness(&v, FieldElement::random(rng), theta, task)
            .map_err(PipelineError::from)?;
        fixed.push(w.commitment());
    }
    let distinct: std::collections::HashSet<_> = fixed.iter().collect();
    if distinct.len() != fixed.len() {
        findings.push("repeated commitment for a fixed vector under fresh salts".into());
    }
    let entropy = mean_bit_entropy(&fixed);
    if entropy < cfg.min_bit_entropy {
        findings.push(format!(
            "mean bit entropy {entropy:.3} below {:.3}",
            cfg.min_bit_entropy
        ));
    }

    let mut varying = Vec::new();
    for r in corpus.passing.iter().take(cfg.zk_samples) {
        let v = normalize(r).map_err(PipelineError::from)?;
        let w = compute_witness(
            &v,
            FieldElement::random(rng),
            profile.for_task(r.task_type),
            r.task_type,
        )
        .map_err(PipelineError::from)?;
        varying.push((v, [w.commitment(), w.nullifier()]));
    }
    findings.extend(leakage_scan(&varying));

    Ok(ZeroKnowledgeSection {
        samples: cfg.zk_samples,
        mean_bit_entropy: entropy,
        passed: findings.is_empty(),
        findings,
    })
}

fn boundary<R: RngCore + CryptoRng>(
    keys: &Keys,
    profile: &ThresholdProfile,
    rng: &mut R,
) -> Result<AttackResult, SecurityError> {
    let mut trials = 0;
    let mut mismatches = Vec::new();
    for task in [TaskType::Binary, TaskType::Regression] {
        let theta = *profile.for_task(task);
        let base = MetricVector {
            valid: 1,
            safe: SCALE,
            qed: SCALE,
            sas: SCALE,
            lip: 0,
            sim: SCALE,
        };
        let th = theta.to_array();
        // Metric index in the vector for each threshold slot.
        for (slot, metric) in [1usize, 2, 3, 4, 5].into_iter().enumerate() {
            if task == TaskType::Binary && slot == 0 {
                // Binary safety is an equality test against 10^6.
                continue;
            }
            for delta in [-1i64, 0, 1] {
                let Some(value) = th[slot].checked_add_signed(delta) else {
                    continue;
                };
                let mut a = base.to_array();
                a[metric] = value;
                let v = MetricVector::from_array(a);
                let w = compute_witness(&v, FieldElement::random(rng), &theta, task)
                    .map_err(PipelineError::from)?;
                let proof = snark::prove(&keys.pk, &w, rng)?;
                let ok = snark::verify(&keys.vk, &w.public_values(), &proof)?;
                trials += 1;
                if !ok || w.passed() != eval_native(&v, &theta, task) {
                    mismatches.push(format!("{task} slot {slot} at threshold{delta:+}"));
                }
            }
        }
        if task == TaskType::Binary {
            for safe in [SCALE - 1, SCALE, SCALE + 1] {
                let v = MetricVector { safe, ..base };
                let w = compute_witness(&v, FieldElement::random(rng), &theta, task)
                    .map_err(PipelineError::from)?;
                trials += 1;
                if w.passed() != (safe == SCALE) {
                    mismatches.push(format!("binary safety at {safe}"));
                }
            }
        }
    }
    Ok(AttackResult {
        scenario: AttackScenario::Boundary,
        passed: mismatches.is_empty(),
        trials,
        detail: if mismatches.is_empty() {
            "result bit matches the reference at every threshold and its neighbours".into()
        } else {
            mismatches.join("; ")
        },
    })
}

fn type_confusion<R: RngCore + CryptoRng>(
    keys: &Keys,
    profile: &ThresholdProfile,
    rng: &mut R,
) -> Result<AttackResult, SecurityError> {
    let task = TaskType::Regression;
    let inputs = CircuitInputs {
        metrics: MetricVector {
            valid: 1,
            safe: SCALE,
            qed: SCALE,
            sas: SCALE,
            lip: 0,
            sim: SCALE,
        },
        salt: FieldElement::random(rng),
        task,
        thresholds: *profile.for_task(task),
    };
    let mut refused = 0;
    let bad_types = [2u64, 3, u64::MAX];
    for t in bad_types {
        let mut raw = RawAssignment::from(&inputs);
        raw.public_inputs[0] = t.into();
        let w = assign_unchecked(&raw);
        if matches!(
            snark::prove(&keys.pk, &w, rng),
            Err(SnarkError::Unsatisfied(_))
        ) {
            refused += 1;
        }
    }
    // An honest proof must not verify under a relabelled task type.
    let honest = assign_unchecked(&RawAssignment::from(&inputs));
    let proof = snark::prove(&keys.pk, &honest, rng)?;
    let mut public = honest.public_values();
    public[layout::TASK_TYPE - layout::PUBLIC_START] = 2u64.into();
    let relabel_refused = !snark::verify(&keys.vk, &public, &proof)?;
    let trials = bad_types.len() + 1;
    let passed = refused == bad_types.len() && relabel_refused;
    Ok(AttackResult {
        scenario: AttackScenario::TypeConfusion,
        passed,
        trials,
        detail: format!(
            "{}/{trials} task types outside {{0,1}} refused",
            refused + relabel_refused as usize
        ),
    })
}

fn overflow<R: RngCore + CryptoRng>(
    keys: &Keys,
    profile: &ThresholdProfile,
    rng: &mut R,
) -> AttackResult {
    let task = TaskType::Binary;
    let theta = profile.for_task(task);
    let base = MetricVector {
        valid: 1,
        safe: SCALE,
        qed: SCALE,
        sas: SCALE,
        lip: 0,
        sim: SCALE,
    };
    let mut trials = 0;
    let mut refused = 0;
    for m in 0..6 {
        for value in [1u64 << 32, (1 << 32) + SCALE] {
            let mut a = base.to_array();
            a[m] = value;
            let v = MetricVector::from_array(a);
            trials += 2;
            if matches!(
                compute_witness(&v, FieldElement::one(), theta, task),
                Err(WitnessError::Overflow { .. })
            ) {
                refused += 1;
            }
            // Bypassing the typed API: the wrapped value must not satisfy.
            let inputs = CircuitInputs {
                metrics: base,
                salt: FieldElement::random(rng),
                task,
                thresholds: *theta,
            };
            let mut raw = RawAssignment::from(&inputs);
            raw.private_inputs[m] = value.into();
            if matches!(
                snark::prove(&keys.pk, &assign_unchecked(&raw), rng),
                Err(SnarkError::Unsatisfied(_))
            ) {
                refused += 1;
            }
        }
    }
    AttackResult {
        scenario: AttackScenario::OverflowInjection,
        passed: refused == trials,
        trials,
        detail: format!("{refused}/{trials} out-of-range metrics refused"),
    }
}

fn replay<R: RngCore + CryptoRng>(
    corpus: &SecurityCorpus,
    keys: &Keys,
    profile: &ThresholdProfile,
    trials: usize,
    rng: &mut R,
) -> Result<AttackResult, SecurityError> {
    let mut caught = 0;
    let total = trials.max(1);
    for i in 0..total {
        let record = &corpus.passing[i % corpus.passing.len()];
        let registry = NullifierSet::in_memory();
        let salt = FieldElement::random(rng);
        let first = run_single_with_salt(record, keys, profile, &registry, salt, rng)?;
        let again = run_single_with_salt(record, keys, profile, &registry, salt, rng)?;
        let resubmitted = verify_bundle(&first.bundle, &keys.vk, &registry)?;
        if first.accepted
            && !again.accepted
            && again.nullifier_status == Some(InsertOutcome::Replay)
            && resubmitted.nullifier_status == Some(InsertOutcome::Replay)
        {
            caught += 1;
        }
    }
    Ok(AttackResult {
        scenario: AttackScenario::Replay,
        passed: caught == total,
        trials: total,
        detail: format!("{caught}/{total} resubmissions flagged as replay"),
    })
}

/// Runs the full suite. Deterministic for a fixed `cfg.seed`.
pub fn security_suite(
    corpus: &SecurityCorpus,
    keys: &Keys,
    profile: &ThresholdProfile,
    cfg: &SecurityConfig,
) -> Result<SecurityReport, SecurityError> {
    check_corpus(corpus, cfg)?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let completeness = completeness(corpus, keys, profile, &mut rng);
    let soundness = soundness(corpus, keys, profile, cfg.forged_witnesses, &mut rng)?;
    let zero_knowledge = zero_knowledge(corpus, profile, cfg, &mut rng)?;
    let attack_resistance = vec![
        boundary(keys, profile, &mut rng)?,
        type_confusion(keys, profile, &mut rng)?,
        overflow(keys, profile, &mut rng),
        replay(corpus, keys, profile, cfg.replay_trials, &mut rng)?,
    ];
    let passed = completeness.all()
        && soundness.rejected == soundness.total
        && soundness.forged_rejected == soundness.forged_total
        && zero_knowledge.passed
        && attack_resistance.iter().all(|a| a.passed);
    Ok(SecurityReport {
        completeness,
        soundness,
        zero_knowledge,
        attack_resistance,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_extremes() {
        let zeros = vec![FieldElement::zero(); 8];
        assert_eq!(mean_bit_entropy(&zeros), 0.0);
        // Alternating all-ones-in-low-bits against zero: half the samples set
        // every bit below 254.
        let ones = -FieldElement::one();
        let mix: Vec<_> = (0..8)
            .map(|i| {
                if i % 2 == 0 {
                    FieldElement::zero()
                } else {
                    ones
                }
            })
            .collect();
        let h = mean_bit_entropy(&mix);
        assert!(h > 0.0 && h <= 1.0);
    }

    #[test]
    fn leakage_scan_detects_affine_output() {
        let samples: Vec<_> = (0..5u64)
            .map(|i| {
                let v = MetricVector {
                    valid: 1,
                    safe: 0,
                    qed: 10 * i,
                    sas: 0,
                    lip: 0,
                    sim: 0,
                };
                let out = FieldElement::from_u64(3) * FieldElement::from_u64(10 * i)
                    + FieldElement::from_u64(7);
                (v, [out, FieldElement::from_u64(1000 + i * i)])
            })
            .collect();
        let f = leakage_scan(&samples);
        assert!(
            f.iter()
                .any(|s| s.contains("commitment is an affine function of qed")),
            "{f:?}"
        );
        assert!(
            !f.iter().any(|s| s.starts_with("nullifier is an affine")),
            "{f:?}"
        );
    }

    #[test]
    fn leakage_scan_detects_equality() {
        let samples: Vec<_> = (1..4u64)
            .map(|i| {
                let v = MetricVector {
                    valid: 1,
                    safe: i * 7,
                    qed: 0,
                    sas: 0,
                    lip: 0,
                    sim: 0,
                };
                (
                    v,
                    [
                        FieldElement::from_u64(i * 7),
                        FieldElement::from_u64(i * i * 13 + 5),
                    ],
                )
            })
            .collect();
        assert!(leakage_scan(&samples)
            .iter()
            .any(|s| s == "commitment equals safe in some sample"));
    }

    #[test]
    fn small_corpus_is_config_error() {
        let corpus = SecurityCorpus {
            passing: vec![],
            failing: vec![],
        };
        let keys = crate::pipeline::test_keys::keys();
        assert!(matches!(
            security_suite(
                &corpus,
                keys,
                &ThresholdProfile::default(),
                &SecurityConfig::default()
            ),
            Err(SecurityError::CorpusTooSmall { .. })
        ));
    }
}
