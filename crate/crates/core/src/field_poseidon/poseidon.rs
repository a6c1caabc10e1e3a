use std::sync::OnceLock;

use super::constants::*;
use super::FieldElement;

pub const FULL_ROUNDS: usize = 8;
pub const MIN_WIDTH: usize = 2;
pub const MAX_WIDTH: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PoseidonError {
    #[error("state has {got} elements but the permutation width is {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("no parameter set for width {0} (supported: 2..=9)")]
    UnsupportedWidth(usize),
    #[error("hash takes 1 to 8 inputs, got {0}")]
    Arity(usize),
}

/// Round constants and MDS matrix for one Poseidon width over BN254.
///
/// These are the circomlib-compatible instantiations (x^5 S-box, eight full
/// rounds, 128-bit security partial-round counts).
#[derive(Debug, Clone)]
pub struct PoseidonParams {
    pub width: usize,
    pub full_rounds: usize,
    pub partial_rounds: usize,
    pub round_constants: Vec<FieldElement>,
    pub mds_matrix: Vec<Vec<FieldElement>>,
}

impl PoseidonParams {
    /// The embedded parameter set for state width `width`.
    pub fn for_width(width: usize) -> Result<&'static PoseidonParams, PoseidonError> {
        static TABLE: OnceLock<Vec<PoseidonParams>> = OnceLock::new();
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&width) {
            return Err(PoseidonError::UnsupportedWidth(width));
        }
        let table = TABLE.get_or_init(|| (MIN_WIDTH..=MAX_WIDTH).map(build).collect());
        Ok(&table[width - MIN_WIDTH])
    }

    pub fn total_rounds(&self) -> usize {
        self.full_rounds + self.partial_rounds
    }

    /// Whether round `r` applies the S-box to every state element.
    pub fn is_full_round(&self, r: usize) -> bool {
        let half = self.full_rounds / 2;
        r < half || r >= half + self.partial_rounds
    }

    /// Constants added at the start of round `r`.
    pub fn round_constants(&self, r: usize) -> &[FieldElement] {
        &self.round_constants[r * self.width..(r + 1) * self.width]
    }
}

fn parse(hexes: &[&str]) -> Vec<FieldElement> {
    hexes
        .iter()
        .map(|h| FieldElement::from_hex(h).expect("embedded Poseidon constant"))
        .collect()
}

fn params<const T: usize, const N: usize>(
    partial_rounds: usize,
    rc: &[&str; N],
    mds: &[[&str; T]; T],
) -> PoseidonParams {
    PoseidonParams {
        width: T,
        full_rounds: FULL_ROUNDS,
        partial_rounds,
        round_constants: parse(rc),
        mds_matrix: mds.iter().map(|row| parse(row)).collect(),
    }
}

fn build(width: usize) -> PoseidonParams {
    match width {
        2 => params(PARTIAL_ROUNDS_T2, &ROUND_CONSTANTS_T2, &MDS_T2),
        3 => params(PARTIAL_ROUNDS_T3, &ROUND_CONSTANTS_T3, &MDS_T3),
        4 => params(PARTIAL_ROUNDS_T4, &ROUND_CONSTANTS_T4, &MDS_T4),
        5 => params(PARTIAL_ROUNDS_T5, &ROUND_CONSTANTS_T5, &MDS_T5),
        6 => params(PARTIAL_ROUNDS_T6, &ROUND_CONSTANTS_T6, &MDS_T6),
        7 => params(PARTIAL_ROUNDS_T7, &ROUND_CONSTANTS_T7, &MDS_T7),
        8 => params(PARTIAL_ROUNDS_T8, &ROUND_CONSTANTS_T8, &MDS_T8),
        9 => params(PARTIAL_ROUNDS_T9, &ROUND_CONSTANTS_T9, &MDS_T9),
        _ => unreachable!("width checked by caller"),
    }
}

#[inline]
pub(crate) fn sbox(x: FieldElement) -> FieldElement {
    let x2 = x.square();
    let x4 = x2.square();
    x4 * x
}

fn mds_mul(state: &[FieldElement], mds: &[Vec<FieldElement>]) -> Vec<FieldElement> {
    mds.iter()
        .map(|row| {
            row.iter()
                .zip(state)
                .fold(FieldElement::zero(), |acc, (m, s)| acc + *m * *s)
        })
        .collect()
}

/// The Poseidon permutation over a full state.
pub fn permute(
    state: &[FieldElement],
    params: &PoseidonParams,
) -> Result<Vec<FieldElement>, PoseidonError> {
    if state.len() != params.width {
        return Err(PoseidonError::WidthMismatch {
            expected: params.width,
            got: state.len(),
        });
    }
    let mut state = state.to_vec();
    for r in 0..params.total_rounds() {
        for (s, c) in state.iter_mut().zip(params.round_constants(r)) {
            *s += *c;
        }
        if params.is_full_round(r) {
            state.iter_mut().for_each(|s| *s = sbox(*s));
        } else {
            state[0] = sbox(state[0]);
        }
        state = mds_mul(&state, &params.mds_matrix);
    }
    Ok(state)
}

/// Single-permutation Poseidon hash of 1 to 8 field elements.
///
/// Uses the width `inputs.len() + 1` instance with the capacity slot (index 0)
/// set to zero and returns the first element of the permuted state. This is
/// the circomlib `Poseidon(n)` construction.
pub fn hash(inputs: &[FieldElement]) -> Result<FieldElement, PoseidonError> {
    if inputs.is_empty() || inputs.len() > MAX_WIDTH - 1 {
        return Err(PoseidonError::Arity(inputs.len()));
    }
    let params = PoseidonParams::for_width(inputs.len() + 1)?;
    let mut state = Vec::with_capacity(params.width);
    state.push(FieldElement::zero());
    state.extend_from_slice(inputs);
    Ok(permute(&state, params)?[0])
}
