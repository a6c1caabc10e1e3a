use crate::field_poseidon::{sbox, FieldElement, PoseidonParams};

use super::builder::{Builder, Num};

/// Width of every metric and threshold range check.
pub(crate) const RANGE_BITS: usize = 32;

pub(crate) fn boolean(b: &mut Builder, x: &Num) {
    b.enforce(x, x, x);
}

pub(crate) fn mul(b: &mut Builder, x: &Num, y: &Num) -> Num {
    if let (Num::Const(c), _) | (_, Num::Const(c)) = (x, y) {
        let other = if matches!(x, Num::Const(_)) { y } else { x };
        return other.scale(*c);
    }
    let z = b.alloc(x.value().zip(y.value()).map(|(x, y)| x * y));
    b.enforce(x, y, &z);
    z
}

/// Decomposes `x` into `n` little-endian bits and constrains the recomposition.
/// Unsatisfiable when `x >= 2^n`.
pub(crate) fn to_bits(b: &mut Builder, x: &Num, n: usize) -> Vec<Num> {
    let bits: Vec<Num> = (0..n)
        .map(|i| {
            let bit = x.value().map(|v| FieldElement::from_u64(v.bit(i) as u64));
            let bit = b.alloc(bit);
            boolean(b, &bit);
            bit
        })
        .collect();
    let mut sum = Num::Const(FieldElement::zero());
    let mut pow = FieldElement::one();
    for bit in &bits {
        sum = sum.add_scaled(bit, pow);
        pow = pow + pow;
    }
    let one = b.one();
    b.enforce(&sum, &one, x);
    bits
}

pub(crate) fn range_check(b: &mut Builder, x: &Num) {
    to_bits(b, x, RANGE_BITS);
}

/// `[x >= y]` for range-checked `x, y < 2^32`: the top bit of
/// `x + 2^32 - y` in a 33-bit decomposition.
pub(crate) fn geq(b: &mut Builder, x: &Num, y: &Num) -> Num {
    let offset = FieldElement::from_u64(1 << RANGE_BITS);
    let diff = x.sub(y).add(&Num::Const(offset));
    to_bits(b, &diff, RANGE_BITS + 1).pop().expect("33 bits")
}

/// `[x == k]` via the inverse-or-zero construction.
pub(crate) fn is_equal_const(b: &mut Builder, x: &Num, k: FieldElement) -> Num {
    let d = x.sub(&Num::Const(k));
    let inv = b.alloc(
        d.value()
            .map(|d| d.inverse().unwrap_or_else(FieldElement::zero)),
    );
    let out = b.alloc(
        d.value()
            .map(|d| FieldElement::from_u64(d.is_zero() as u64)),
    );
    let one_minus_out = b.one().sub(&out);
    b.enforce(&d, &inv, &one_minus_out);
    b.enforce(&d, &out, &Num::Const(FieldElement::zero()));
    out
}

/// `if sel { on_one } else { on_zero }` for boolean `sel`:
/// `sel * (on_one - on_zero) = out - on_zero`.
pub(crate) fn select(b: &mut Builder, sel: &Num, on_one: &Num, on_zero: &Num) -> Num {
    let delta = on_one.sub(on_zero);
    let out = b.alloc(
        sel.value()
            .zip(delta.value())
            .zip(on_zero.value())
            .map(|((s, d), z)| z + s * d),
    );
    let rhs = out.sub(on_zero);
    b.enforce(sel, &delta, &rhs);
    out
}

fn sbox_gadget(b: &mut Builder, x: &Num) -> Num {
    if let Num::Const(c) = x {
        return Num::Const(sbox(*c));
    }
    let x2 = mul(b, x, x);
    let x4 = mul(b, &x2, &x2);
    mul(b, &x4, x)
}

/// In-circuit Poseidon hash with the same construction as
/// [`field_poseidon::hash`](crate::field_poseidon::hash).
pub(crate) fn poseidon(b: &mut Builder, inputs: &[Num]) -> Num {
    let params = PoseidonParams::for_width(inputs.len() + 1).expect("supported arity");
    let mut state: Vec<Num> = std::iter::once(Num::Const(FieldElement::zero()))
        .chain(inputs.iter().cloned())
        .collect();
    for r in 0..params.total_rounds() {
        for (s, c) in state.iter_mut().zip(params.round_constants(r)) {
            *s = s.add(&Num::Const(*c));
        }
        if params.is_full_round(r) {
            for s in state.iter_mut() {
                *s = sbox_gadget(b, s);
            }
        } else {
            state[0] = sbox_gadget(b, &state[0]);
        }
        state = params
            .mds_matrix
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&state)
                    .fold(Num::Const(FieldElement::zero()), |acc, (m, s)| {
                        acc.add_scaled(s, *m)
                    })
            })
            .collect();
    }
    state.swap_remove(0)
}
