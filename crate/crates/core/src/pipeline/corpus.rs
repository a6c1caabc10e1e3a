//! Synthetic evaluation records drawn from the threshold table's ranges.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::data_processor::{EvaluationRecord, SafetyLabel, SafetyRaw, TaskType};
use crate::SCALE;

/// Well-formed SMILES of common small molecules.
pub const VALID_SMILES: &[&str] = &[
    "CC(=O)OC1=CC=CC=C1C(=O)O",
    "CN1C=NC2=C1C(=O)N(C(=O)N2C)C",
    "CC(C)CC1=CC=C(C=C1)C(C)C(=O)O",
    "CC(=O)NC1=CC=C(C=C1)O",
    "CCO",
    "c1ccccc1",
    "C1CCCCC1",
    "OC(=O)c1ccccc1O",
    "CN1CCC[C@H]1c1cccnc1",
    "NCC(=O)O",
    "O=C(O)C[C@@H](N)C(=O)O",
    "CC(C)(C)OC(=O)N",
    "c1ccc2ccccc2c1",
    "C1=CC=C(C=C1)C=O",
    "[NH4+].[Cl-]",
    "FC(F)(F)c1ccc(cc1)N",
];

/// Strings that break the grammar: unclosed rings, unbalanced branches,
/// dangling bonds, unterminated brackets, unknown symbols.
pub const INVALID_SMILES: &[&str] = &[
    "C1CC",
    "CC(C",
    "CC)C",
    "C[Fe",
    "CC=",
    "=CC",
    "C(=)C",
    "C1CC1C1",
    "c1ccccc1)",
    "CC((C))C)",
    "Xx",
    "C%",
    "()",
    "C..C",
    "C[]C",
];

fn frac(k: u64) -> f64 {
    k as f64 / SCALE as f64
}

/// Deterministic generator; molecule ids are unique per instance.
pub struct SyntheticCorpus {
    rng: ChaCha20Rng,
    next_id: usize,
    task: Option<TaskType>,
}

impl SyntheticCorpus {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            next_id: 0,
            task: None,
        }
    }

    /// Restricts generated records to one task type instead of a coin flip.
    pub fn for_task(mut self, task: TaskType) -> Self {
        self.task = Some(task);
        self
    }

    fn id(&mut self, kind: &str) -> String {
        self.next_id += 1;
        format!("syn-{kind}-{:05}", self.next_id)
    }

    fn task(&mut self) -> TaskType {
        if let Some(t) = self.task {
            t
        } else if self.rng.gen() {
            TaskType::Binary
        } else {
            TaskType::Regression
        }
    }

    /// A record meeting every default threshold for a random task type.
    pub fn passing_record(&mut self) -> EvaluationRecord {
        let task = self.task();
        let safety = match task {
            TaskType::Binary => SafetyRaw::Label(SafetyLabel::NonToxic),
            TaskType::Regression => SafetyRaw::Score(frac(self.rng.gen_range(SCALE / 2..=SCALE))),
        };
        EvaluationRecord {
            molecule_id: self.id("pass"),
            smiles: Some(
                VALID_SMILES
                    .choose(&mut self.rng)
                    .expect("non-empty")
                    .to_string(),
            ),
            task_id: match task {
                TaskType::Binary => "ames".into(),
                TaskType::Regression => "ld50".into(),
            },
            task_type: task,
            validity_flag: None,
            safety,
            qed: frac(self.rng.gen_range(SCALE / 2..=SCALE)),
            sas: frac(self.rng.gen_range(SCALE..=6 * SCALE)),
            lipinski_violations: self.rng.gen_range(0..=1),
            similarity: frac(self.rng.gen_range(4 * SCALE / 10..=SCALE)),
        }
    }

    pub fn passing(&mut self, n: usize) -> Vec<EvaluationRecord> {
        (0..n).map(|_| self.passing_record()).collect()
    }

    /// A well-formed molecule that misses exactly one threshold, cycling
    /// through safety, QED, SAS, Lipinski and similarity.
    pub fn failing_threshold_record(&mut self, which: usize) -> EvaluationRecord {
        let mut r = self.passing_record();
        r.molecule_id = self.id("fail");
        match which % 5 {
            0 => {
                r.safety = match r.task_type {
                    TaskType::Binary => SafetyRaw::Label(SafetyLabel::Toxic),
                    TaskType::Regression => {
                        SafetyRaw::Score(frac(self.rng.gen_range(0..SCALE / 2)))
                    }
                }
            }
            1 => r.qed = frac(self.rng.gen_range(0..SCALE / 2)),
            2 => r.sas = frac(self.rng.gen_range(6 * SCALE + 1..=10 * SCALE)),
            3 => r.lipinski_violations = self.rng.gen_range(2..=4),
            _ => r.similarity = frac(self.rng.gen_range(0..4 * SCALE / 10)),
        }
        r
    }

    pub fn failing_thresholds(&mut self, n: usize) -> Vec<EvaluationRecord> {
        (0..n).map(|i| self.failing_threshold_record(i)).collect()
    }

    /// Otherwise passing metrics attached to a malformed SMILES string.
    pub fn invalid_smiles(&mut self, n: usize) -> Vec<EvaluationRecord> {
        (0..n)
            .map(|i| {
                let mut r = self.passing_record();
                r.molecule_id = self.id("invalid");
                r.smiles = Some(INVALID_SMILES[i % INVALID_SMILES.len()].to_string());
                r
            })
            .collect()
    }

    /// Records sitting exactly on every default threshold; these pass.
    pub fn boundary(&mut self, n: usize) -> Vec<EvaluationRecord> {
        (0..n)
            .map(|_| {
                let mut r = self.passing_record();
                r.molecule_id = self.id("edge");
                if r.task_type == TaskType::Regression {
                    r.safety = SafetyRaw::Score(0.5);
                }
                r.qed = 0.5;
                r.sas = 6.0;
                r.lipinski_violations = 1;
                r.similarity = 0.4;
                r
            })
            .collect()
    }
}
