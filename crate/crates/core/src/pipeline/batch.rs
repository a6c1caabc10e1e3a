use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data_processor::{EvaluationRecord, LineNote, ThresholdProfile};
use crate::nullifier_registry::{InsertOutcome, NullifierSet};
use crate::snark::ProofBundle;

use super::{finish_record, prove_record, Keys, Phase, PhaseTimings, PipelineError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    /// Worker threads for witness generation, proving and verification.
    pub workers: usize,
    /// Seeds per-record salts and proof randomness; `None` draws from the OS.
    pub seed: Option<u64>,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MoleculeStatus {
    /// Accepted: valid, verified, result 1, fresh nullifier.
    Succeeded,
    /// Processed but not accepted.
    Failed,
    /// Unusable input: malformed line, normalization or precheck failure.
    Rejected,
}

#[derive(Debug, Clone, Serialize)]
pub struct MoleculeReport {
    pub index: usize,
    pub molecule_id: String,
    pub task_id: String,
    pub status: MoleculeStatus,
    /// Whether the proof verified; `None` if no proof was produced.
    pub verification_result: Option<bool>,
    /// The circuit's result bit.
    pub result: Option<bool>,
    pub nullifier_status: Option<InsertOutcome>,
    pub nullifier: Option<String>,
    pub error_phase: Option<Phase>,
    pub error: Option<String>,
    pub warnings: Vec<String>,
    pub timings: PhaseTimings,
    #[serde(skip)]
    pub bundle: Option<ProofBundle>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub attempted: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub rejected: usize,
    pub proofs_verified: usize,
    /// `succeeded / attempted`.
    pub success_rate: f64,
    pub total_seconds: f64,
    pub seconds_per_molecule: f64,
    pub throughput: f64,
    pub workers: usize,
    pub phase_totals: PhaseTimings,
    pub phase_max: PhaseTimings,
    pub peak_memory_kib: Option<u64>,
    pub molecules: Vec<MoleculeReport>,
}

impl RunReport {
    fn from_molecules(molecules: Vec<MoleculeReport>, total_seconds: f64, workers: usize) -> Self {
        let count = |s| molecules.iter().filter(|m| m.status == s).count();
        let attempted = molecules.len();
        let mut phase_totals = PhaseTimings::default();
        let mut phase_max = PhaseTimings::default();
        for m in &molecules {
            phase_totals.add(&m.timings);
            let t = &m.timings;
            let mx = &mut phase_max;
            mx.normalize = mx.normalize.max(t.normalize);
            mx.precheck = mx.precheck.max(t.precheck);
            mx.salt = mx.salt.max(t.salt);
            mx.witness = mx.witness.max(t.witness);
            mx.prove = mx.prove.max(t.prove);
            mx.verify = mx.verify.max(t.verify);
            mx.nullifier = mx.nullifier.max(t.nullifier);
        }
        let succeeded = count(MoleculeStatus::Succeeded);
        Self {
            attempted,
            succeeded,
            failed: count(MoleculeStatus::Failed),
            rejected: count(MoleculeStatus::Rejected),
            proofs_verified: molecules
                .iter()
                .filter(|m| m.verification_result == Some(true))
                .count(),
            success_rate: if attempted == 0 {
                0.0
            } else {
                succeeded as f64 / attempted as f64
            },
            total_seconds,
            seconds_per_molecule: if attempted == 0 {
                0.0
            } else {
                total_seconds / attempted as f64
            },
            throughput: if total_seconds > 0.0 {
                attempted as f64 / total_seconds
            } else {
                0.0
            },
            workers,
            phase_totals,
            phase_max,
            peak_memory_kib: peak_memory_kib(),
            molecules,
        }
    }

    /// Folds lines rejected at ingestion into the report as rejected attempts.
    pub fn with_ingest_rejects(self, rejects: &[LineNote]) -> Self {
        let mut molecules = self.molecules;
        for r in rejects {
            molecules.push(MoleculeReport {
                index: molecules.len(),
                molecule_id: String::new(),
                task_id: String::new(),
                status: MoleculeStatus::Rejected,
                verification_result: None,
                result: None,
                nullifier_status: None,
                nullifier: None,
                error_phase: None,
                error: Some(format!("line {}: {}", r.line, r.message)),
                warnings: Vec::new(),
                timings: PhaseTimings::default(),
                bundle: None,
            });
        }
        Self::from_molecules(molecules, self.total_seconds, self.workers)
    }
}

/// Peak resident set size of this process, where the platform reports it.
pub fn peak_memory_kib() -> Option<u64> {
    #[cfg(target_os = "linux")]
    {
        let status = std::fs::read_to_string("/proc/self/status").ok()?;
        status
            .lines()
            .find_map(|l| l.strip_prefix("VmHWM:"))
            .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
    }
    #[cfg(not(target_os = "linux"))]
    {
        None
    }
}

fn record_rng(seed: Option<u64>, index: usize) -> ChaCha20Rng {
    match seed {
        Some(s) => {
            let mut rng = ChaCha20Rng::seed_from_u64(s);
            rng.set_stream(index as u64);
            rng
        }
        None => ChaCha20Rng::from_entropy(),
    }
}

fn error_report(
    index: usize,
    record: &EvaluationRecord,
    err: &PipelineError,
    timings: PhaseTimings,
) -> MoleculeReport {
    MoleculeReport {
        index,
        molecule_id: record.molecule_id.clone(),
        task_id: record.task_id.clone(),
        status: if err.is_data_error() {
            MoleculeStatus::Rejected
        } else {
            MoleculeStatus::Failed
        },
        verification_result: None,
        result: None,
        nullifier_status: None,
        nullifier: None,
        error_phase: Some(err.phase()),
        error: Some(err.to_string()),
        warnings: Vec::new(),
        timings,
        bundle: None,
    }
}

/// Proves records in parallel, then checks nullifiers one at a time in input
/// order so outcomes do not depend on scheduling.
pub fn run_batch(
    records: &[EvaluationRecord],
    keys: &Keys,
    profile: &ThresholdProfile,
    registry: &NullifierSet,
    options: &BatchOptions,
) -> RunReport {
    let start = Instant::now();
    let workers = options.workers.max(1);
    let prove_all = || {
        records
            .par_iter()
            .enumerate()
            .map(|(i, r)| prove_record(r, keys, profile, None, &mut record_rng(options.seed, i)))
            .collect::<Vec<_>>()
    };
    let proved = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(prove_all),
        Err(e) => {
            log::warn!("falling back to the global thread pool: {e}");
            prove_all()
        }
    };

    let molecules = proved
        .into_iter()
        .zip(records)
        .enumerate()
        .map(|(i, (p, record))| {
            let p = match p {
                Ok(p) => p,
                Err(e) => return error_report(i, record, &e, PhaseTimings::default()),
            };
            let timings = p.timings;
            match finish_record(p, registry) {
                Ok(out) => MoleculeReport {
                    index: i,
                    molecule_id: record.molecule_id.clone(),
                    task_id: record.task_id.clone(),
                    status: if out.accepted {
                        MoleculeStatus::Succeeded
                    } else {
                        MoleculeStatus::Failed
                    },
                    verification_result: Some(out.proof_valid),
                    result: Some(out.bundle.passed()),
                    nullifier_status: out.nullifier_status,
                    nullifier: Some(out.bundle.nullifier().to_hex()),
                    error_phase: None,
                    error: None,
                    warnings: out.warnings,
                    timings: out.timings,
                    bundle: Some(out.bundle),
                },
                Err(e) => error_report(i, record, &e, timings),
            }
        })
        .collect();
    RunReport::from_molecules(molecules, start.elapsed().as_secs_f64(), workers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::test_keys::keys;
    use crate::pipeline::SyntheticCorpus;

    #[test]
    fn conservation_and_order() {
        let mut corpus = SyntheticCorpus::new(9);
        let mut records = corpus.passing(3);
        records.extend(corpus.failing_thresholds(2));
        let reg = NullifierSet::in_memory();
        let opts = BatchOptions {
            workers: 2,
            seed: Some(1),
        };
        let report = run_batch(&records, keys(), &ThresholdProfile::default(), &reg, &opts);
        assert_eq!(
            report.attempted,
            report.succeeded + report.failed + report.rejected
        );
        assert_eq!(report.succeeded, 3);
        assert_eq!(report.failed, 2);
        assert!((report.success_rate - 0.6).abs() < 1e-12);
        let ids: Vec<_> = report
            .molecules
            .iter()
            .map(|m| m.molecule_id.clone())
            .collect();
        let expected: Vec<_> = records.iter().map(|r| r.molecule_id.clone()).collect();
        assert_eq!(ids, expected);
        assert!(report.total_seconds >= report.phase_max.prove);
    }

    #[test]
    fn rerun_is_all_replay() {
        let records = SyntheticCorpus::new(10).passing(2);
        let reg = NullifierSet::in_memory();
        let opts = BatchOptions {
            workers: 1,
            seed: Some(5),
        };
        let first = run_batch(&records, keys(), &ThresholdProfile::default(), &reg, &opts);
        assert_eq!(first.succeeded, 2);
        let second = run_batch(&records, keys(), &ThresholdProfile::default(), &reg, &opts);
        assert_eq!(second.succeeded, 0);
        assert!(second
            .molecules
            .iter()
            .all(|m| m.nullifier_status == Some(InsertOutcome::Replay)));
    }

    #[test]
    fn ingest_rejects_are_counted() {
        let records = SyntheticCorpus::new(11).passing(1);
        let reg = NullifierSet::in_memory();
        let report = run_batch(
            &records,
            keys(),
            &ThresholdProfile::default(),
            &reg,
            &BatchOptions::default(),
        )
        .with_ingest_rejects(&[LineNote {
            line: 2,
            message: "bad json".into(),
        }]);
        assert_eq!(report.attempted, 2);
        assert_eq!(report.rejected, 1);
        assert_eq!(report.succeeded, 1);
    }
}
