//! Recursive model rotation.
//!
//! Starting from a transition assignment (one that falsifies exactly one
//! constraint), every single-variable change on the scope of the falsified
//! constraint is examined. Each change that again yields a transition
//! assignment for a constraint not yet known is explored the same way.
//! No solver is called.

use crate::model::{Assignment, ConstraintId, ConstraintNetwork, ConstraintSet, ModelError, VarId};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RotationError {
    #[error("assignment falsifies {violated} constraints, expected exactly one")]
    NotTransition { violated: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug)]
pub struct RotationOutcome {
    /// The input set extended with every constraint found.
    pub muc: ConstraintSet,
    /// Constraints that were not in the input set, in discovery order.
    pub added: Vec<ConstraintId>,
    /// Rotated assignments examined.
    pub checks: u64,
}

/// Expands `c_muc` by recursive model rotation from the transition
/// assignment `a` of the sub-network `constraints`.
pub fn recursive_mr(
    net: &ConstraintNetwork,
    constraints: &ConstraintSet,
    c_muc: &ConstraintSet,
    a: &Assignment,
) -> Result<ConstraintSet, RotationError> {
    rotate(net, constraints, c_muc, a).map(|o| o.muc)
}

struct Frame {
    assignment: Vec<usize>,
    constraint: ConstraintId,
    pos: usize,
    value: usize,
}

/// Same as [`recursive_mr`], with discovery order and effort.
pub fn rotate(
    net: &ConstraintNetwork,
    constraints: &ConstraintSet,
    c_muc: &ConstraintSet,
    a: &Assignment,
) -> Result<RotationOutcome, RotationError> {
    let violated = net.violated_within(constraints, a)?;
    if violated.len() != 1 {
        return Err(RotationError::NotTransition {
            violated: violated.len(),
        });
    }
    let first = violated.iter().next().expect("one violated constraint");
    let mut muc = c_muc.clone();
    let mut added = Vec::new();
    if muc.insert(first) {
        added.push(first);
    }
    let mut checks = 0;
    // explicit stack; visits rotations in the same order as the recursive form
    let mut stack = vec![Frame {
        assignment: a.to_indices(net),
        constraint: first,
        pos: 0,
        value: 0,
    }];
    while let Some(top) = stack.last_mut() {
        let scope = &net.constraint(top.constraint).scope;
        if top.pos == scope.len() {
            stack.pop();
            continue;
        }
        let x = scope[top.pos];
        if top.value == net.variable(x).domain.len() {
            top.pos += 1;
            top.value = 0;
            continue;
        }
        let v = top.value;
        top.value += 1;
        if v == top.assignment[x] {
            continue;
        }
        checks += 1;
        if let Some(c) = single_violation_after(net, constraints, &top.assignment, x, v) {
            if muc.insert(c) {
                added.push(c);
                let mut next = top.assignment.clone();
                next[x] = v;
                stack.push(Frame {
                    assignment: next,
                    constraint: c,
                    pos: 0,
                    value: 0,
                });
            }
        }
    }
    Ok(RotationOutcome { muc, added, checks })
}

/// For a transition assignment whose falsified constraint involves `x`,
/// the constraints falsified after setting `x` to `v` all involve `x`.
fn single_violation_after(
    net: &ConstraintNetwork,
    constraints: &ConstraintSet,
    assignment: &[usize],
    x: VarId,
    v: usize,
) -> Option<ConstraintId> {
    let mut found = None;
    for &c in net.constraints_on(x) {
        if !constraints.contains(c) {
            continue;
        }
        let ok = net.allows(c, |y| if y == x { v } else { assignment[y] });
        if !ok {
            if found.is_some() {
                return None;
            }
            found = Some(c);
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn ordering_rotation_finds_only_c4() {
        let net = fixtures::ordering();
        let a = Assignment::from_pairs(&net, &[("i", 2), ("j", 0), ("k", 1), ("l", 2), ("m", 4)])
            .unwrap();
        let all = net.all_constraints();
        // independent check: every one-variable change of i or j falsifies
        // c4 alone or at least two constraints
        let c4 = net.constraint_id("c4").unwrap();
        for var in ["i", "j"] {
            let x = net.var_id(var).unwrap();
            for v in 0..5 {
                let violated = net.violated_set(&a.with(x, v)).unwrap();
                assert!(
                    violated.len() >= 2 || violated.to_vec() == vec![c4],
                    "{var}={v}"
                );
            }
        }
        let out = rotate(&net, &all, &net.no_constraints(), &a).unwrap();
        assert_eq!(out.muc.to_vec(), vec![c4]);
        assert_eq!(out.added, vec![c4]);
        assert_eq!(out.checks, 8);
    }

    #[test]
    fn diamond_rotation_finds_only_c3() {
        let net = fixtures::diamond();
        let a =
            Assignment::from_pairs(&net, &[("x1", 1), ("x2", 2), ("x3", 2), ("x4", 1)]).unwrap();
        let out = recursive_mr(&net, &net.all_constraints(), &net.no_constraints(), &a).unwrap();
        assert_eq!(net.names(&out), vec!["c3"]);
    }

    #[test]
    fn known_constraint_is_idempotent() {
        let net = fixtures::diamond();
        let a =
            Assignment::from_pairs(&net, &[("x1", 1), ("x2", 2), ("x3", 2), ("x4", 1)]).unwrap();
        let known = net.constraint_set(&["c3"]).unwrap();
        let out = rotate(&net, &net.all_constraints(), &known, &a).unwrap();
        assert_eq!(out.muc, known);
        assert!(out.added.is_empty());
    }

    #[test]
    fn rotation_walks_the_triangle() {
        // on the strict-inequality triangle every constraint is found by rotation
        let net = fixtures::lt_triangle();
        let a = Assignment::from_pairs(&net, &[("i", 2), ("j", 0), ("k", 1)]).unwrap();
        let out = rotate(&net, &net.all_constraints(), &net.no_constraints(), &a).unwrap();
        assert_eq!(out.muc, net.all_constraints());
        assert_eq!(out.added[0], net.constraint_id("c4").unwrap());
    }

    #[test]
    fn rejects_non_transition() {
        let net = fixtures::ordering();
        let a = Assignment::new(&net, vec![0; 5]).unwrap();
        assert!(matches!(
            recursive_mr(&net, &net.all_constraints(), &net.no_constraints(), &a),
            Err(RotationError::NotTransition { .. })
        ));
    }
}
