//! Zero-knowledge threshold proofs for molecular toxicity-repair evaluations.
//!
//! A prover holds six fixed-point evaluation metrics for a repaired molecule
//! and proves, with Groth16 over BN254, whether they meet a public threshold
//! set. The proof exposes only the pass/fail bit, a salted Poseidon commitment
//! to the metrics and a nullifier that lets a verifier refuse replays.
//!
//! Module map:
//! - [`field_poseidon`]: field elements and the Poseidon hash.
//! - [`smiles`]: grammar-level SMILES validation.
//! - [`data_processor`]: JSON Lines ingestion, fixed-point normalization, prechecks.
//! - [`circuit`]: the R1CS, witness generation, native reference evaluator, analysis.
//! - [`snark`]: Groth16 setup/prove/verify and the proof bundle format.
//! - [`nullifier_registry`]: persistent spent-nullifier set.
//! - [`pipeline`]: end-to-end runs, batches, benchmarks and the security suite.

pub mod circuit;
pub mod data_processor;
pub mod field_poseidon;
pub mod nullifier_registry;
pub mod pipeline;
pub mod smiles;
pub mod snark;

pub use circuit::{
    commitment, compute_witness, eval_native, nullifier, synthesize, ConstraintReport,
    ConstraintSystem, Witness,
};
pub use data_processor::{EvaluationRecord, MetricVector, TaskType, ThresholdSet};
pub use field_poseidon::FieldElement;
pub use nullifier_registry::{InsertOutcome, NullifierSet};
pub use snark::{Proof, ProofBundle, ProvingKey, VerifyingKey};

/// Fixed-point scale applied to every real-valued metric.
pub const SCALE: u64 = 1_000_000;
