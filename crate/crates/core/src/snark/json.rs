//! JSON encodings of proofs and verifying keys.
//!
//! Coordinates are affine, as `0x`-prefixed 64-digit big-endian hex. G2
//! coordinates are `[c0, c1]` pairs. The point at infinity is written as all
//! zeros. Decoding checks canonical coordinates, curve membership and the
//! prime-order subgroup.

use ark_bn254::{Bn254, Fq, Fq2, G1Affine, G2Affine};
use ark_ec::AffineRepr;
use ark_ff::{BigInteger, PrimeField, Zero};
use ark_serialize::CanonicalDeserialize;
use serde::{Deserialize, Serialize};

use super::{SnarkError, CURVE, PROTOCOL};

fn fq_to_hex(x: &Fq) -> String {
    format!("0x{}", hex::encode(x.into_bigint().to_bytes_be()))
}

fn fq_from_hex(s: &str) -> Result<Fq, SnarkError> {
    let digits = s
        .strip_prefix("0x")
        .ok_or_else(|| SnarkError::Decode(format!("coordinate {s:?} lacks 0x prefix")))?;
    if digits.len() != 64 {
        return Err(SnarkError::Decode(format!(
            "coordinate {s:?} must have 64 hex digits"
        )));
    }
    let mut bytes =
        hex::decode(digits).map_err(|e| SnarkError::Decode(format!("coordinate {s:?}: {e}")))?;
    bytes.reverse();
    Fq::deserialize_compressed(bytes.as_slice()).map_err(|_| {
        SnarkError::Decode(format!(
            "coordinate {s:?} is not a canonical base field element"
        ))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct G1Json(pub [String; 2]);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct G2Json(pub [[String; 2]; 2]);

impl G1Json {
    fn from_point(p: &G1Affine) -> Self {
        match p.xy() {
            Some((x, y)) => Self([fq_to_hex(&x), fq_to_hex(&y)]),
            None => Self([fq_to_hex(&Fq::zero()), fq_to_hex(&Fq::zero())]),
        }
    }

    fn to_point(&self) -> Result<G1Affine, SnarkError> {
        let x = fq_from_hex(&self.0[0])?;
        let y = fq_from_hex(&self.0[1])?;
        if x.is_zero() && y.is_zero() {
            return Ok(G1Affine::identity());
        }
        let p = G1Affine::new_unchecked(x, y);
        if !p.is_on_curve() {
            return Err(SnarkError::Decode("G1 point is not on the curve".into()));
        }
        Ok(p)
    }
}

impl G2Json {
    fn from_point(p: &G2Affine) -> Self {
        let enc = |v: &Fq2| [fq_to_hex(&v.c0), fq_to_hex(&v.c1)];
        match p.xy() {
            Some((x, y)) => Self([enc(&x), enc(&y)]),
            None => Self([enc(&Fq2::zero()), enc(&Fq2::zero())]),
        }
    }

    fn to_point(&self) -> Result<G2Affine, SnarkError> {
        let dec = |v: &[String; 2]| -> Result<Fq2, SnarkError> {
            Ok(Fq2::new(fq_from_hex(&v[0])?, fq_from_hex(&v[1])?))
        };
        let x = dec(&self.0[0])?;
        let y = dec(&self.0[1])?;
        if x.is_zero() && y.is_zero() {
            return Ok(G2Affine::identity());
        }
        let p = G2Affine::new_unchecked(x, y);
        if !p.is_on_curve() {
            return Err(SnarkError::Decode("G2 point is not on the curve".into()));
        }
        if !p.is_in_correct_subgroup_assuming_on_curve() {
            return Err(SnarkError::Decode(
                "G2 point is outside the prime-order subgroup".into(),
            ));
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofJson {
    pub pi_a: G1Json,
    pub pi_b: G2Json,
    pub pi_c: G1Json,
}

impl ProofJson {
    pub(super) fn from_proof(p: &ark_groth16::Proof<Bn254>) -> Self {
        Self {
            pi_a: G1Json::from_point(&p.a),
            pi_b: G2Json::from_point(&p.b),
            pi_c: G1Json::from_point(&p.c),
        }
    }

    pub(super) fn to_proof(&self) -> Result<ark_groth16::Proof<Bn254>, SnarkError> {
        Ok(ark_groth16::Proof {
            a: self.pi_a.to_point()?,
            b: self.pi_b.to_point()?,
            c: self.pi_c.to_point()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyingKeyJson {
    pub protocol: String,
    pub curve: String,
    #[serde(rename = "nPublic")]
    pub n_public: usize,
    pub vk_alpha_1: G1Json,
    pub vk_beta_2: G2Json,
    pub vk_gamma_2: G2Json,
    pub vk_delta_2: G2Json,
    #[serde(rename = "IC")]
    pub ic: Vec<G1Json>,
    /// SHA-256 of the constraint system the key belongs to.
    pub circuit_digest: String,
}

impl VerifyingKeyJson {
    pub(super) fn from_key(vk: &ark_groth16::VerifyingKey<Bn254>, digest: [u8; 32]) -> Self {
        Self {
            protocol: PROTOCOL.into(),
            curve: CURVE.into(),
            n_public: vk.gamma_abc_g1.len() - 1,
            vk_alpha_1: G1Json::from_point(&vk.alpha_g1),
            vk_beta_2: G2Json::from_point(&vk.beta_g2),
            vk_gamma_2: G2Json::from_point(&vk.gamma_g2),
            vk_delta_2: G2Json::from_point(&vk.delta_g2),
            ic: vk.gamma_abc_g1.iter().map(G1Json::from_point).collect(),
            circuit_digest: hex::encode(digest),
        }
    }

    pub(super) fn to_key(
        &self,
    ) -> Result<(ark_groth16::VerifyingKey<Bn254>, [u8; 32]), SnarkError> {
        if self.protocol != PROTOCOL || self.curve != CURVE {
            return Err(SnarkError::Decode(format!(
                "unsupported protocol/curve {}/{}",
                self.protocol, self.curve
            )));
        }
        if self.ic.len() != self.n_public + 1 {
            return Err(SnarkError::Decode(format!(
                "IC has {} points for {} public values",
                self.ic.len(),
                self.n_public
            )));
        }
        let digest: [u8; 32] = hex::decode(&self.circuit_digest)
            .ok()
            .and_then(|d| d.try_into().ok())
            .ok_or_else(|| SnarkError::Decode("circuit_digest must be 64 hex digits".into()))?;
        let vk = ark_groth16::VerifyingKey {
            alpha_g1: self.vk_alpha_1.to_point()?,
            beta_g2: self.vk_beta_2.to_point()?,
            gamma_g2: self.vk_gamma_2.to_point()?,
            delta_g2: self.vk_delta_2.to_point()?,
            gamma_abc_g1: self
                .ic
                .iter()
                .map(G1Json::to_point)
                .collect::<Result<_, _>>()?,
        };
        Ok((vk, digest))
    }
}
