use std::fmt;
use std::sync::OnceLock;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::field_poseidon::FieldElement;

use super::layout;

/// Sparse linear combination over wires, sorted by wire index with no zero terms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinearCombination {
    terms: Vec<(usize, FieldElement)>,
}

impl LinearCombination {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn wire(index: usize) -> Self {
        Self {
            terms: vec![(index, FieldElement::one())],
        }
    }

    pub fn constant(c: FieldElement) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            Self {
                terms: vec![(layout::ONE, c)],
            }
        }
    }

    pub fn terms(&self) -> &[(usize, FieldElement)] {
        &self.terms
    }

    pub fn wires(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.iter().map(|(w, _)| *w)
    }

    /// True when the combination only involves the constant wire.
    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(w, _)| *w == layout::ONE)
    }

    /// `self + k * other`, merging terms.
    pub fn add_scaled(&self, other: &Self, k: FieldElement) -> Self {
        if k.is_zero() {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let next = match (self.terms.get(i), other.terms.get(j)) {
                (Some(a), Some(b)) if a.0 == b.0 => {
                    i += 1;
                    j += 1;
                    (a.0, a.1 + k * b.1)
                }
                (Some(a), Some(b)) if a.0 < b.0 => {
                    i += 1;
                    *a
                }
                (Some(a), None) => {
                    i += 1;
                    *a
                }
                (_, Some(b)) => {
                    j += 1;
                    (b.0, k * b.1)
                }
                (None, None) => unreachable!(),
            };
            if !next.1.is_zero() {
                out.push(next);
            }
        }
        Self { terms: out }
    }

    pub fn scale(&self, k: FieldElement) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(w, c)| (*w, *c * k)).collect(),
        }
    }

    pub fn evaluate(&self, assignment: &[FieldElement]) -> FieldElement {
        self.terms.iter().fold(FieldElement::zero(), |acc, (w, c)| {
            acc + *c * assignment[*w]
        })
    }
}

/// One rank-1 constraint `a * b = c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub a: LinearCombination,
    pub b: LinearCombination,
    pub c: LinearCombination,
}

impl Constraint {
    /// A constraint is linear when one multiplicand is a constant.
    pub fn is_linear(&self) -> bool {
        self.a.is_constant() || self.b.is_constant()
    }

    pub fn is_satisfied(&self, assignment: &[FieldElement]) -> bool {
        self.a.evaluate(assignment) * self.b.evaluate(assignment) == self.c.evaluate(assignment)
    }
}

/// Circuit component a constraint belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Hash,
    Safety,
    Qed,
    Sas,
    Lipinski,
    Similarity,
    Validity,
    Glue,
}

impl Component {
    pub const ALL: [Component; 8] = [
        Component::Hash,
        Component::Safety,
        Component::Qed,
        Component::Sas,
        Component::Lipinski,
        Component::Similarity,
        Component::Validity,
        Component::Glue,
    ];
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().expect("string tag"))
    }
}

/// A labeled rank-1 constraint system.
///
/// Wire 0 is the constant one. Public inputs, public outputs and private
/// inputs follow in that order (see [`layout`](super::layout)).
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub(crate) num_wires: usize,
    pub(crate) num_public_inputs: usize,
    pub(crate) num_public_outputs: usize,
    pub(crate) num_private_inputs: usize,
    pub(crate) constraints: Vec<Constraint>,
    pub(crate) labels: Vec<Component>,
    digest: OnceLock<[u8; 32]>,
}

impl PartialEq for ConstraintSystem {
    fn eq(&self, other: &Self) -> bool {
        self.num_wires == other.num_wires
            && self.num_public_inputs == other.num_public_inputs
            && self.num_public_outputs == other.num_public_outputs
            && self.num_private_inputs == other.num_private_inputs
            && self.constraints == other.constraints
            && self.labels == other.labels
    }
}

impl Eq for ConstraintSystem {}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Unsatisfied {
    #[error("assignment has {got} wires, system has {expected}")]
    WireCount { expected: usize, got: usize },
    #[error("wire 0 must carry the constant one")]
    ConstantWire,
    #[error("constraint {index} ({component}) is violated")]
    Constraint { index: usize, component: Component },
}

impl ConstraintSystem {
    pub(crate) fn new(
        num_wires: usize,
        io: (usize, usize, usize),
        constraints: Vec<Constraint>,
        labels: Vec<Component>,
    ) -> Self {
        assert_eq!(
            constraints.len(),
            labels.len(),
            "every constraint is labeled"
        );
        Self {
            num_wires,
            num_public_inputs: io.0,
            num_public_outputs: io.1,
            num_private_inputs: io.2,
            constraints,
            labels,
            digest: OnceLock::new(),
        }
    }

    /// A system with no constraints and only the constant wire.
    pub fn empty() -> Self {
        Self::new(1, (0, 0, 0), Vec::new(), Vec::new())
    }

    pub fn num_wires(&self) -> usize {
        self.num_wires
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_public_inputs(&self) -> usize {
        self.num_public_inputs
    }

    pub fn num_public_outputs(&self) -> usize {
        self.num_public_outputs
    }

    pub fn num_private_inputs(&self) -> usize {
        self.num_private_inputs
    }

    /// Instance size seen by the SNARK: public inputs followed by public outputs.
    pub fn num_public_values(&self) -> usize {
        self.num_public_inputs + self.num_public_outputs
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn labels(&self) -> &[Component] {
        &self.labels
    }

    pub fn is_satisfied(&self, witness: &Witness) -> Result<(), Unsatisfied> {
        let values = witness.values();
        if values.len() != self.num_wires {
            return Err(Unsatisfied::WireCount {
                expected: self.num_wires,
                got: values.len(),
            });
        }
        if values[layout::ONE] != FieldElement::one() {
            return Err(Unsatisfied::ConstantWire);
        }
        match self
            .constraints
            .iter()
            .position(|c| !c.is_satisfied(values))
        {
            None => Ok(()),
            Some(index) => Err(Unsatisfied::Constraint {
                index,
                component: self.labels[index],
            }),
        }
    }

    /// SHA-256 over the full constraint list, used to bind keys to a circuit.
    pub fn digest(&self) -> [u8; 32] {
        *self.digest.get_or_init(|| {
            let mut h = Sha256::new();
            for n in [
                self.num_wires,
                self.num_public_inputs,
                self.num_public_outputs,
                self.num_private_inputs,
                self.constraints.len(),
            ] {
                h.update((n as u64).to_be_bytes());
            }
            for (c, label) in self.constraints.iter().zip(&self.labels) {
                h.update([*label as u8]);
                for lc in [&c.a, &c.b, &c.c] {
                    h.update((lc.terms.len() as u64).to_be_bytes());
                    for (w, k) in &lc.terms {
                        h.update((*w as u64).to_be_bytes());
                        h.update(k.to_bytes_be());
                    }
                }
            }
            h.finalize().into()
        })
    }
}

/// A full wire assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    values: Vec<FieldElement>,
}

impl Witness {
    pub(crate) fn from_values(values: Vec<FieldElement>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[FieldElement] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, wire: usize) -> FieldElement {
        self.values[wire]
    }

    /// Overwrites one wire. Only useful for forging assignments in tests.
    pub fn set_wire(&mut self, wire: usize, value: FieldElement) {
        self.values[wire] = value;
    }

    /// The nine instance values in normative order: `[t, θ_safe, θ_qed,
    /// θ_sas, θ_lip, θ_sim, result, commitment, nullifier]`.
    pub fn public_values(&self) -> Vec<FieldElement> {
        self.values[layout::PUBLIC_START..layout::PRIVATE_START].to_vec()
    }

    pub fn result(&self) -> FieldElement {
        self.values[layout::RESULT]
    }

    pub fn passed(&self) -> bool {
        self.result() == FieldElement::one()
    }

    pub fn commitment(&self) -> FieldElement {
        self.values[layout::COMMITMENT]
    }

    pub fn nullifier(&self) -> FieldElement {
        self.values[layout::NULLIFIER]
    }
}
