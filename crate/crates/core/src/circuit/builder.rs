//! Constraint builder shared by shape synthesis and witness generation.
//!
//! The same gadget code runs in both modes so the wire layout of a witness
//! always matches the synthesized system. In shape mode linear combinations
//! are tracked and constraints recorded; in witness mode only values are.

use crate::field_poseidon::FieldElement;

use super::layout;
use super::r1cs::{Component, Constraint, ConstraintSystem, LinearCombination};

/// A circuit value: either a compile-time constant or a linear combination
/// of wires with its (optional) assigned value.
#[derive(Clone, Debug)]
pub(crate) enum Num {
    Const(FieldElement),
    Var {
        lc: Option<LinearCombination>,
        value: Option<FieldElement>,
    },
}

impl Num {
    pub fn value(&self) -> Option<FieldElement> {
        match self {
            Num::Const(c) => Some(*c),
            Num::Var { value, .. } => *value,
        }
    }

    fn lc(&self) -> Option<LinearCombination> {
        match self {
            Num::Const(c) => Some(LinearCombination::constant(*c)),
            Num::Var { lc, .. } => lc.clone(),
        }
    }

    /// `self + k * other`
    pub fn add_scaled(&self, other: &Num, k: FieldElement) -> Num {
        match (self, other) {
            (Num::Const(a), Num::Const(b)) => Num::Const(*a + k * *b),
            _ => Num::Var {
                lc: match (self.lc(), other.lc()) {
                    (Some(a), Some(b)) => Some(a.add_scaled(&b, k)),
                    _ => None,
                },
                value: match (self.value(), other.value()) {
                    (Some(a), Some(b)) => Some(a + k * b),
                    _ => None,
                },
            },
        }
    }

    pub fn add(&self, other: &Num) -> Num {
        self.add_scaled(other, FieldElement::one())
    }

    pub fn sub(&self, other: &Num) -> Num {
        self.add_scaled(other, -FieldElement::one())
    }

    pub fn scale(&self, k: FieldElement) -> Num {
        Num::Const(FieldElement::zero()).add_scaled(self, k)
    }
}

pub(crate) struct Builder {
    record: bool,
    values: Option<Vec<FieldElement>>,
    num_wires: usize,
    constraints: Vec<Constraint>,
    labels: Vec<Component>,
    label: Component,
}

impl Builder {
    /// Records constraints; no values.
    pub fn shape() -> Self {
        Self::new(true, false)
    }

    /// Computes values; no constraints.
    pub fn witness() -> Self {
        Self::new(false, true)
    }

    fn new(record: bool, values: bool) -> Self {
        Self {
            record,
            values: values.then(|| vec![FieldElement::one()]),
            num_wires: 1,
            constraints: Vec::new(),
            labels: Vec::new(),
            label: Component::Glue,
        }
    }

    pub fn set_label(&mut self, label: Component) {
        self.label = label;
    }

    pub fn one(&self) -> Num {
        Num::Const(FieldElement::one())
    }

    /// Allocates a new wire. In witness mode `value` must be known.
    pub fn alloc(&mut self, value: Option<FieldElement>) -> Num {
        let index = self.num_wires;
        self.num_wires += 1;
        let value = match &mut self.values {
            Some(values) => {
                let v = value.expect("witness mode needs every wire value");
                values.push(v);
                Some(v)
            }
            None => None,
        };
        Num::Var {
            lc: self.record.then(|| LinearCombination::wire(index)),
            value,
        }
    }

    /// Overwrites a previously allocated wire's value (witness mode only).
    pub fn assign(&mut self, wire: usize, value: Option<FieldElement>) {
        if let (Some(values), Some(v)) = (&mut self.values, value) {
            values[wire] = v;
        }
    }

    pub fn wire(&self, index: usize) -> Num {
        Num::Var {
            lc: self.record.then(|| LinearCombination::wire(index)),
            value: self.values.as_ref().map(|v| v[index]),
        }
    }

    pub fn enforce(&mut self, a: &Num, b: &Num, c: &Num) {
        if self.record {
            let lc = |n: &Num| n.lc().expect("shape mode tracks linear combinations");
            self.constraints.push(Constraint {
                a: lc(a),
                b: lc(b),
                c: lc(c),
            });
            self.labels.push(self.label);
        }
    }

    pub fn finish_shape(self) -> ConstraintSystem {
        ConstraintSystem::new(
            self.num_wires,
            (
                layout::NUM_PUBLIC_INPUTS,
                layout::NUM_PUBLIC_OUTPUTS,
                layout::NUM_PRIVATE_INPUTS,
            ),
            self.constraints,
            self.labels,
        )
    }

    pub fn finish_values(self) -> Vec<FieldElement> {
        self.values.expect("witness mode")
    }
}
