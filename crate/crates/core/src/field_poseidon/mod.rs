//! BN254 scalar-field arithmetic and the Poseidon permutation.

#[rustfmt::skip]
mod constants;
mod field;
mod poseidon;

pub use field::{FieldElement, FieldError};
pub use poseidon::{
    hash, permute, PoseidonError, PoseidonParams, FULL_ROUNDS, MAX_WIDTH, MIN_WIDTH,
};

pub(crate) use poseidon::sbox;

/// State width used for the seven-input metric commitment.
pub const COMMITMENT_WIDTH: usize = 8;
/// State width used for the two-input nullifier.
pub const NULLIFIER_WIDTH: usize = 3;
