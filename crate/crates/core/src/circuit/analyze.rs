use serde::Serialize;

use super::layout;
use super::r1cs::{Component, ConstraintSystem};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentShare {
    pub component: Component,
    pub constraints: usize,
    /// Percentage of all constraints, 0 for an empty system.
    pub share_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub total_constraints: usize,
    pub linear_constraints: usize,
    pub nonlinear_constraints: usize,
    pub wires: usize,
    pub public_inputs: usize,
    pub private_inputs: usize,
    pub public_outputs: usize,
    pub components: Vec<ComponentShare>,
    /// Longest chain of dependent nonlinear constraints.
    pub multiplicative_depth: usize,
    /// Connected groups of constraints once input wires are removed; groups
    /// share nothing but inputs and can be evaluated independently.
    pub independent_groups: usize,
    /// Largest number of constraints at the same dependency depth.
    pub max_level_width: usize,
}

impl ConstraintReport {
    pub fn count(&self, component: Component) -> usize {
        self.components
            .iter()
            .find(|c| c.component == component)
            .map_or(0, |c| c.constraints)
    }

    /// Fraction of constraints in `component`, in `[0, 1]`.
    pub fn share(&self, component: Component) -> f64 {
        if self.total_constraints == 0 {
            0.0
        } else {
            self.count(component) as f64 / self.total_constraints as f64
        }
    }
}

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

fn is_input_wire(cs: &ConstraintSystem, w: usize) -> bool {
    let public_inputs_end = layout::PUBLIC_START + cs.num_public_inputs;
    let private_start = public_inputs_end + cs.num_public_outputs;
    w == layout::ONE
        || (layout::PUBLIC_START..public_inputs_end).contains(&w)
        || (private_start..private_start + cs.num_private_inputs).contains(&w)
}

/// Size, composition and dependency structure of a constraint system.
///
/// Depth: input wires start at depth 0. Constraints are visited in order; a
/// constraint's depth is the deepest already-defined wire it touches, plus
/// one if it is nonlinear, and every wire it touches for the first time is
/// defined at that depth.
pub fn analyze(cs: &ConstraintSystem) -> ConstraintReport {
    let total = cs.num_constraints();
    let linear = cs.constraints().iter().filter(|c| c.is_linear()).count();

    let components = Component::ALL
        .iter()
        .map(|&component| {
            let n = cs.labels().iter().filter(|l| **l == component).count();
            ComponentShare {
                component,
                constraints: n,
                share_percent: if total == 0 {
                    0.0
                } else {
                    100.0 * n as f64 / total as f64
                },
            }
        })
        .collect();

    let mut wire_depth: Vec<Option<usize>> = (0..cs.num_wires())
        .map(|w| is_input_wire(cs, w).then_some(0))
        .collect();
    let mut depths = Vec::with_capacity(total);
    for c in cs.constraints() {
        let wires = || c.a.wires().chain(c.b.wires()).chain(c.c.wires());
        let base = wires().filter_map(|w| wire_depth[w]).max().unwrap_or(0);
        let d = base + usize::from(!c.is_linear());
        for w in wires() {
            wire_depth[w].get_or_insert(d);
        }
        depths.push(d);
    }
    let multiplicative_depth = depths.iter().copied().max().unwrap_or(0);
    let mut level_width = vec![0usize; multiplicative_depth + 1];
    for d in &depths {
        level_width[*d] += 1;
    }

    let mut sets = DisjointSets((0..total).collect());
    let mut owner: Vec<Option<usize>> = vec![None; cs.num_wires()];
    for (i, c) in cs.constraints().iter().enumerate() {
        for w in c.a.wires().chain(c.b.wires()).chain(c.c.wires()) {
            if is_input_wire(cs, w) {
                continue;
            }
            match owner[w] {
                Some(j) => sets.union(i, j),
                None => owner[w] = Some(i),
            }
        }
    }
    let independent_groups = (0..total).filter(|&i| sets.find(i) == i).count();

    ConstraintReport {
        total_constraints: total,
        linear_constraints: linear,
        nonlinear_constraints: total - linear,
        wires: cs.num_wires(),
        public_inputs: cs.num_public_inputs(),
        private_inputs: cs.num_private_inputs(),
        public_outputs: cs.num_public_outputs(),
        components,
        multiplicative_depth,
        independent_groups,
        max_level_width: if total == 0 {
            0
        } else {
            level_width.into_iter().max().unwrap_or(0)
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::eval_circuit;

    #[test]
    fn empty_system_reports_zeros() {
        let r = analyze(&ConstraintSystem::empty());
        assert_eq!(r.total_constraints, 0);
        assert_eq!(r.multiplicative_depth, 0);
        assert_eq!(r.independent_groups, 0);
        assert_eq!(r.max_level_width, 0);
        assert!(r
            .components
            .iter()
            .all(|c| c.constraints == 0 && c.share_percent == 0.0));
        assert_eq!(r.share(Component::Hash), 0.0);
    }

    #[test]
    fn eval_circuit_profile() {
        let r = analyze(eval_circuit());
        assert_eq!(
            r.linear_constraints + r.nonlinear_constraints,
            r.total_constraints
        );
        let sum: usize = r.components.iter().map(|c| c.constraints).sum();
        assert_eq!(sum, r.total_constraints);
        assert!(r.share(Component::Hash) >= 0.4, "{r:#?}");
        assert!(r.count(Component::Safety) > r.count(Component::Qed));
        // Width-8 Poseidon: 8 full rounds x 8 S-boxes + 64 partial, 3 constraints each,
        // plus the width-3 instance (8 x 3 + 57) x 3, plus two output bindings. The
        // first S-box of each hash acts on the constant capacity slot and is free.
        assert_eq!(
            r.count(Component::Hash),
            (8 * 8 + 64 - 1) * 3 + (8 * 3 + 57 - 1) * 3 + 2
        );
    }
}
