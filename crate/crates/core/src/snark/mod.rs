//! Groth16 over BN254.
//!
//! A thin adapter that feeds [`ConstraintSystem`] into `ark-groth16`. Wires
//! `1..=num_public_values` become instance variables in order, the rest are
//! witness variables, and wire 0 maps to the constant one.

mod json;

use std::sync::Arc;

use ark_bn254::{Bn254, Fr};
use ark_groth16::Groth16;
use ark_relations::lc;
use ark_relations::r1cs::{
    ConstraintSynthesizer, ConstraintSystemRef, LinearCombination as ArkLc,
    SynthesisError as ArkError, Variable,
};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use crate::circuit::{layout, ConstraintSystem, LinearCombination, Unsatisfied, Witness};
use crate::field_poseidon::FieldElement;

pub use json::{G1Json, G2Json, ProofJson, VerifyingKeyJson};

/// Size of a compressed proof: two G1 points and one G2 point.
pub const PROOF_BYTES: usize = 32 + 64 + 32;

const PK_MAGIC: &[u8; 8] = b"MPGROTH1";

#[derive(Debug, thiserror::Error)]
pub enum SnarkError {
    #[error("setup failed: {0}")]
    Setup(String),
    #[error("witness does not satisfy the constraint system: {0}")]
    Unsatisfied(#[from] Unsatisfied),
    #[error("prover failed: {0}")]
    Prover(String),
    #[error("expected {expected} public values, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("key was generated for a different constraint system")]
    KeyMismatch,
    #[error("decode error: {0}")]
    Decode(String),
}

impl SnarkError {
    /// True for malformed encodings, as opposed to a proof that simply fails.
    pub fn is_decode(&self) -> bool {
        matches!(self, SnarkError::Decode(_) | SnarkError::Arity { .. })
    }
}

struct Adapter<'a> {
    cs: &'a ConstraintSystem,
    values: Option<&'a [FieldElement]>,
}

fn to_ark_lc(lc: &LinearCombination, vars: &[Variable]) -> ArkLc<Fr> {
    let mut out = lc!();
    for (w, k) in lc.terms() {
        out += (k.inner(), vars[*w]);
    }
    out
}

impl ConstraintSynthesizer<Fr> for Adapter<'_> {
    fn generate_constraints(self, cs: ConstraintSystemRef<Fr>) -> Result<(), ArkError> {
        let n_public = self.cs.num_public_values();
        let value = |w: usize| {
            self.values
                .map(|v| v[w].inner())
                .ok_or(ArkError::AssignmentMissing)
        };
        let mut vars = Vec::with_capacity(self.cs.num_wires());
        vars.push(Variable::One);
        for w in 1..self.cs.num_wires() {
            let var = if w <= n_public {
                cs.new_input_variable(|| value(w))?
            } else {
                cs.new_witness_variable(|| value(w))?
            };
            vars.push(var);
        }
        for c in self.cs.constraints() {
            cs.enforce_constraint(
                to_ark_lc(&c.a, &vars),
                to_ark_lc(&c.b, &vars),
                to_ark_lc(&c.c, &vars),
            )?;
        }
        Ok(())
    }
}

#[derive(Clone)]
pub struct ProvingKey {
    inner: ark_groth16::ProvingKey<Bn254>,
    cs: Arc<ConstraintSystem>,
}

impl std::fmt::Debug for ProvingKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProvingKey")
            .field("circuit", &hex::encode(self.cs.digest()))
            .finish_non_exhaustive()
    }
}

impl ProvingKey {
    pub fn constraint_system(&self) -> &ConstraintSystem {
        &self.cs
    }

    pub fn verifying_key(&self) -> VerifyingKey {
        VerifyingKey::new(self.inner.vk.clone(), self.cs.digest())
    }

    /// Binary encoding: magic, circuit digest, uncompressed key.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.inner.uncompressed_size() + 40);
        out.extend_from_slice(PK_MAGIC);
        out.extend_from_slice(&self.cs.digest());
        self.inner
            .serialize_uncompressed(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    /// Decodes a key and binds it to `cs`, which must be the system it was
    /// generated for. Points are validated.
    pub fn from_bytes(bytes: &[u8], cs: &ConstraintSystem) -> Result<Self, SnarkError> {
        let rest = bytes
            .strip_prefix(PK_MAGIC.as_slice())
            .ok_or_else(|| SnarkError::Decode("not a proving key".into()))?;
        if rest.len() < 32 {
            return Err(SnarkError::Decode("truncated proving key".into()));
        }
        let (digest, body) = rest.split_at(32);
        if digest != cs.digest() {
            return Err(SnarkError::KeyMismatch);
        }
        let inner = ark_groth16::ProvingKey::<Bn254>::deserialize_uncompressed(body)
            .map_err(|e| SnarkError::Decode(format!("proving key: {e}")))?;
        if inner.vk.gamma_abc_g1.len() != cs.num_public_values() + 1 {
            return Err(SnarkError::KeyMismatch);
        }
        Ok(Self {
            inner,
            cs: Arc::new(cs.clone()),
        })
    }
}

#[derive(Clone)]
pub struct VerifyingKey {
    inner: ark_groth16::VerifyingKey<Bn254>,
    prepared: ark_groth16::PreparedVerifyingKey<Bn254>,
    circuit_digest: [u8; 32],
}

impl std::fmt::Debug for VerifyingKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VerifyingKey")
            .field("circuit", &hex::encode(self.circuit_digest))
            .field("num_public", &self.num_public())
            .finish_non_exhaustive()
    }
}

impl PartialEq for VerifyingKey {
    fn eq(&self, other: &Self) -> bool {
        self.inner == other.inner && self.circuit_digest == other.circuit_digest
    }
}

impl VerifyingKey {
    fn new(inner: ark_groth16::VerifyingKey<Bn254>, circuit_digest: [u8; 32]) -> Self {
        let prepared = ark_groth16::prepare_verifying_key(&inner);
        Self {
            inner,
            prepared,
            circuit_digest,
        }
    }

    /// Number of public values a proof is checked against.
    pub fn num_public(&self) -> usize {
        self.inner.gamma_abc_g1.len().saturating_sub(1)
    }

    pub fn circuit_digest(&self) -> [u8; 32] {
        self.circuit_digest
    }

    pub fn to_json(&self) -> VerifyingKeyJson {
        VerifyingKeyJson::from_key(&self.inner, self.circuit_digest)
    }

    pub fn from_json(json: &VerifyingKeyJson) -> Result<Self, SnarkError> {
        let (inner, digest) = json.to_key()?;
        Ok(Self::new(inner, digest))
    }
}

impl Serialize for VerifyingKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for VerifyingKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let json = VerifyingKeyJson::deserialize(d)?;
        Self::from_json(&json).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Proof(ark_groth16::Proof<Bn254>);

impl Proof {
    /// Compressed encoding, always [`PROOF_BYTES`] long.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(PROOF_BYTES);
        self.0
            .serialize_compressed(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    /// Rejects wrong lengths, points off the curve and points outside the
    /// prime-order subgroup.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SnarkError> {
        if bytes.len() != PROOF_BYTES {
            return Err(SnarkError::Decode(format!(
                "proof must be {PROOF_BYTES} bytes, got {}",
                bytes.len()
            )));
        }
        ark_groth16::Proof::deserialize_compressed(bytes)
            .map(Proof)
            .map_err(|e| SnarkError::Decode(format!("proof: {e}")))
    }

    pub fn to_json(&self) -> ProofJson {
        ProofJson::from_proof(&self.0)
    }

    pub fn from_json(json: &ProofJson) -> Result<Self, SnarkError> {
        json.to_proof().map(Proof)
    }
}

impl Serialize for Proof {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Proof {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let json = ProofJson::deserialize(d)?;
        Self::from_json(&json).map_err(serde::de::Error::custom)
    }
}

/// Runs a fresh trusted setup for `cs`. The setup randomness is drawn from
/// `rng` and dropped on return.
pub fn setup<R: RngCore + CryptoRng>(
    cs: &ConstraintSystem,
    rng: &mut R,
) -> Result<(ProvingKey, VerifyingKey), SnarkError> {
    let adapter = Adapter { cs, values: None };
    let inner = Groth16::<Bn254>::generate_random_parameters_with_reduction(adapter, rng)
        .map_err(|e| SnarkError::Setup(e.to_string()))?;
    let pk = ProvingKey {
        inner,
        cs: Arc::new(cs.clone()),
    };
    let vk = pk.verifying_key();
    Ok((pk, vk))
}

/// Proves knowledge of `witness`. Each call uses fresh blinding, so the same
/// witness yields different proofs.
pub fn prove<R: RngCore + CryptoRng>(
    pk: &ProvingKey,
    witness: &Witness,
    rng: &mut R,
) -> Result<Proof, SnarkError> {
    // The backend only debug-asserts satisfiability.
    pk.cs.is_satisfied(witness)?;
    let adapter = Adapter {
        cs: &pk.cs,
        values: Some(witness.values()),
    };
    Groth16::<Bn254>::create_random_proof_with_reduction(adapter, &pk.inner, rng)
        .map(Proof)
        .map_err(|e| SnarkError::Prover(e.to_string()))
}

/// Checks `proof` against `public_values` (inputs then outputs).
pub fn verify(
    vk: &VerifyingKey,
    public_values: &[FieldElement],
    proof: &Proof,
) -> Result<bool, SnarkError> {
    if public_values.len() != vk.num_public() {
        return Err(SnarkError::Arity {
            expected: vk.num_public(),
            got: public_values.len(),
        });
    }
    let inputs: Vec<Fr> = public_values.iter().map(FieldElement::inner).collect();
    Groth16::<Bn254>::verify_proof(&vk.prepared, &proof.0, &inputs)
        .map_err(|e| SnarkError::Decode(e.to_string()))
}

pub const PROTOCOL: &str = "groth16";
pub const CURVE: &str = "bn128";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBundle")]
pub struct ProofBundle {
    pub molecule_id: String,
    pub task_id: String,
    /// `[t, θ_safe, θ_qed, θ_sas, θ_lip, θ_sim, result, commitment, nullifier]`
    pub public_values: Vec<FieldElement>,
    pub proof: Proof,
    pub protocol: String,
    pub curve: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBundle {
    molecule_id: String,
    task_id: String,
    public_values: Vec<FieldElement>,
    proof: Proof,
    protocol: String,
    curve: String,
}

impl TryFrom<RawBundle> for ProofBundle {
    type Error = SnarkError;

    fn try_from(r: RawBundle) -> Result<Self, SnarkError> {
        if r.protocol != PROTOCOL || r.curve != CURVE {
            return Err(SnarkError::Decode(format!(
                "unsupported protocol/curve {}/{}",
                r.protocol, r.curve
            )));
        }
        let bundle = ProofBundle {
            molecule_id: r.molecule_id,
            task_id: r.task_id,
            public_values: r.public_values,
            proof: r.proof,
            protocol: r.protocol,
            curve: r.curve,
        };
        bundle.check_shape()?;
        Ok(bundle)
    }
}

impl ProofBundle {
    pub fn new(
        molecule_id: impl Into<String>,
        task_id: impl Into<String>,
        public_values: Vec<FieldElement>,
        proof: Proof,
    ) -> Self {
        Self {
            molecule_id: molecule_id.into(),
            task_id: task_id.into(),
            public_values,
            proof,
            protocol: PROTOCOL.into(),
            curve: CURVE.into(),
        }
    }

    /// Nine public values with a boolean result slot.
    pub fn check_shape(&self) -> Result<(), SnarkError> {
        if self.public_values.len() != layout::NUM_PUBLIC_VALUES {
            return Err(SnarkError::Arity {
                expected: layout::NUM_PUBLIC_VALUES,
                got: self.public_values.len(),
            });
        }
        let r = self.result_value();
        if r != FieldElement::zero() && r != FieldElement::one() {
            return Err(SnarkError::Decode("result slot is not 0 or 1".into()));
        }
        Ok(())
    }

    fn slot(&self, wire: usize) -> FieldElement {
        self.public_values[wire - layout::PUBLIC_START]
    }

    fn result_value(&self) -> FieldElement {
        self.slot(layout::RESULT)
    }

    pub fn passed(&self) -> bool {
        self.result_value() == FieldElement::one()
    }

    pub fn task_encoding(&self) -> FieldElement {
        self.slot(layout::TASK_TYPE)
    }

    pub fn commitment(&self) -> FieldElement {
        self.slot(layout::COMMITMENT)
    }

    pub fn nullifier(&self) -> FieldElement {
        self.slot(layout::NULLIFIER)
    }

    pub fn verify(&self, vk: &VerifyingKey) -> Result<bool, SnarkError> {
        self.check_shape()?;
        verify(vk, &self.public_values, &self.proof)
    }
}
