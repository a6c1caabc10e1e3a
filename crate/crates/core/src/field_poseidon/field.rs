use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use ark_bn254::Fr;
use ark_ff::{BigInteger, Field, PrimeField, Zero};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Errors raised when decoding a field element from its external encodings.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FieldError {
    #[error("value is not below the field modulus")]
    NonCanonical,
    #[error("expected {expected} bytes, got {got}")]
    Length { expected: usize, got: usize },
    #[error("malformed hex field element {0:?}: expected 0x followed by 64 hex digits")]
    Hex(String),
}

/// An element of the scalar field of the BN254 (alt-bn128) curve.
///
/// Always held in reduced form. The canonical external encoding is 32 bytes
/// big-endian, or `0x` followed by 64 lowercase hex digits in JSON.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement(pub(crate) Fr);

impl FieldElement {
    pub const BYTES: usize = 32;

    pub const fn from_inner(inner: Fr) -> Self {
        Self(inner)
    }

    pub fn inner(&self) -> Fr {
        self.0
    }

    pub fn zero() -> Self {
        Self(Fr::zero())
    }

    pub fn one() -> Self {
        Self(Fr::from(1u64))
    }

    pub fn from_u64(v: u64) -> Self {
        Self(Fr::from(v))
    }

    /// Reduces an arbitrary big-endian byte string modulo p.
    pub fn from_be_bytes_mod_order(bytes: &[u8]) -> Self {
        Self(Fr::from_be_bytes_mod_order(bytes))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn inverse(&self) -> Option<Self> {
        self.0.inverse().map(Self)
    }

    pub fn square(&self) -> Self {
        Self(self.0.square())
    }

    pub fn pow(&self, exp: u64) -> Self {
        Self(self.0.pow([exp]))
    }

    /// Returns the value as a `u64` when it fits.
    pub fn to_u64(&self) -> Option<u64> {
        let limbs = self.0.into_bigint().0;
        if limbs[1..].iter().all(|l| *l == 0) {
            Some(limbs[0])
        } else {
            None
        }
    }

    /// Bit `i` of the canonical integer representative, little-endian order.
    pub fn bit(&self, i: usize) -> bool {
        self.0.into_bigint().get_bit(i)
    }

    pub fn to_bytes_be(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        out.copy_from_slice(&self.0.into_bigint().to_bytes_be());
        out
    }

    pub fn from_bytes_be(bytes: &[u8]) -> Result<Self, FieldError> {
        if bytes.len() != Self::BYTES {
            return Err(FieldError::Length {
                expected: Self::BYTES,
                got: bytes.len(),
            });
        }
        let mut le = [0u8; 32];
        for (dst, src) in le.iter_mut().zip(bytes.iter().rev()) {
            *dst = *src;
        }
        let mut limbs = [0u64; 4];
        for (limb, chunk) in limbs.iter_mut().zip(le.chunks_exact(8)) {
            *limb = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        Fr::from_bigint(ark_ff::BigInt::new(limbs))
            .map(Self)
            .ok_or(FieldError::NonCanonical)
    }

    pub fn to_hex(&self) -> String {
        format!("0x{}", hex::encode(self.to_bytes_be()))
    }

    pub fn from_hex(s: &str) -> Result<Self, FieldError> {
        let digits = s
            .strip_prefix("0x")
            .filter(|d| d.len() == 64)
            .ok_or_else(|| FieldError::Hex(s.to_owned()))?;
        let bytes = hex::decode(digits).map_err(|_| FieldError::Hex(s.to_owned()))?;
        Self::from_bytes_be(&bytes)
    }

    /// Uniform sample from the whole field.
    ///
    /// Draws 32 bytes, clears the two bits above 2^254 and rejects values
    /// that are not below p, so every field element is equally likely.
    pub fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut buf = [0u8; 32];
            rng.fill_bytes(&mut buf);
            buf[0] &= 0x3f;
            if let Ok(v) = Self::from_bytes_be(&buf) {
                return v;
            }
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_u64() {
            Some(v) => write!(f, "Fe({v})"),
            None => write!(f, "Fe({})", self.to_hex()),
        }
    }
}

impl FromStr for FieldElement {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_hex(s)
    }
}

impl From<u64> for FieldElement {
    fn from(v: u64) -> Self {
        Self::from_u64(v)
    }
}

impl From<Fr> for FieldElement {
    fn from(v: Fr) -> Self {
        Self(v)
    }
}

impl Serialize for FieldElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for FieldElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $assign_trait:ident, $assign_method:ident) => {
        impl $trait for FieldElement {
            type Output = FieldElement;
            #[inline]
            fn $method(self, rhs: FieldElement) -> FieldElement {
                FieldElement(self.0.$method(rhs.0))
            }
        }
        impl $assign_trait for FieldElement {
            #[inline]
            fn $assign_method(&mut self, rhs: FieldElement) {
                self.0.$assign_method(rhs.0);
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign);
binop!(Sub, sub, SubAssign, sub_assign);
binop!(Mul, mul, MulAssign, mul_assign);

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement(-self.0)
    }
}
