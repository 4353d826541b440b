//! Exhaustive ground truth for small networks.
//!
//! Everything here uses [`Constraint::holds`](crate::model::Constraint::holds)
//! only, so it shares no evaluation code with the solver or the local
//! search.

mod generate;

pub use generate::{generate, Gadget, GenParams};

use crate::model::{Assignment, ConstraintId, ConstraintNetwork, ConstraintSet, VarId};

/// Largest search space the oracle accepts by default.
pub const DEFAULT_BOUND: u128 = 10_000_000;

/// Largest constraint set [`all_mucs`] accepts.
pub const MAX_ENUMERATION: usize = 20;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("search space of {size} assignments exceeds the bound {bound}")]
    BoundExceeded { size: u128, bound: u128 },
    #[error("{size} constraints exceed the enumeration limit {limit}")]
    TooManyConstraints { size: usize, limit: usize },
}

/// Lexicographically first assignment satisfying `constraints`, or `None`.
///
/// Only variables in the scope of some constraint are searched; the others
/// take their smallest value. Refuses when the searched space exceeds
/// `bound`.
pub fn brute_sat(
    net: &ConstraintNetwork,
    constraints: &ConstraintSet,
    bound: u128,
) -> Result<Option<Assignment>, OracleError> {
    let n = net.num_variables();
    // constraints to check once their last scope variable is assigned
    let mut check_at: Vec<Vec<ConstraintId>> = vec![Vec::new(); n];
    let mut involved = vec![false; n];
    for c in constraints.iter() {
        let scope = &net.constraint(c).scope;
        for &x in scope {
            involved[x] = true;
        }
        let last = *scope.iter().max().expect("non-empty scope");
        check_at[last].push(c);
    }
    let size = (0..n).filter(|&x| involved[x]).fold(1u128, |acc, x| {
        acc.saturating_mul(net.variable(x).domain.len() as u128)
    });
    if size > bound {
        return Err(OracleError::BoundExceeded { size, bound });
    }
    let order: Vec<VarId> = (0..n).filter(|&x| involved[x]).collect();
    let mut values: Vec<i64> = net.variables().iter().map(|v| v.min()).collect();
    let mut pos = vec![0usize; n];
    let mut depth = 0;
    if order.is_empty() {
        return Ok(Some(Assignment::new(net, values).expect("minimum values")));
    }
    loop {
        let x = order[depth];
        let domain = &net.variable(x).domain;
        if pos[x] == domain.len() {
            pos[x] = 0;
            if depth == 0 {
                return Ok(None);
            }
            depth -= 1;
            pos[order[depth]] += 1;
            continue;
        }
        values[x] = domain[pos[x]];
        let ok = check_at[x]
            .iter()
            .all(|&c| net.constraint(c).holds(&|y| values[y]));
        if !ok {
            pos[x] += 1;
        } else if depth + 1 == order.len() {
            return Ok(Some(Assignment::new(net, values).expect("domain values")));
        } else {
            depth += 1;
        }
    }
}

fn is_sat(net: &ConstraintNetwork, constraints: &ConstraintSet) -> Result<bool, OracleError> {
    brute_sat(net, constraints, DEFAULT_BOUND).map(|a| a.is_some())
}

/// Whether `c` is a transition constraint of the sub-network
/// `constraints`: the sub-network is unsatisfiable and removing `c` makes
/// it satisfiable.
pub fn is_transition_constraint(
    net: &ConstraintNetwork,
    constraints: &ConstraintSet,
    c: ConstraintId,
) -> Result<bool, OracleError> {
    if !constraints.contains(c) || is_sat(net, constraints)? {
        return Ok(false);
    }
    let mut rest = constraints.clone();
    rest.remove(c);
    is_sat(net, &rest)
}

/// Whether `constraints` is unsatisfiable and every proper subset is
/// satisfiable.
pub fn is_muc(net: &ConstraintNetwork, constraints: &ConstraintSet) -> Result<bool, OracleError> {
    if is_sat(net, constraints)? {
        return Ok(false);
    }
    for c in constraints.iter() {
        let mut rest = constraints.clone();
        rest.remove(c);
        if !is_sat(net, &rest)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every minimal unsatisfiable subset of `constraints`, by increasing size
/// and then in lexicographic order of ids.
pub fn all_mucs(
    net: &ConstraintNetwork,
    constraints: &ConstraintSet,
) -> Result<Vec<ConstraintSet>, OracleError> {
    let ids = constraints.to_vec();
    if ids.len() > MAX_ENUMERATION {
        return Err(OracleError::TooManyConstraints {
            size: ids.len(),
            limit: MAX_ENUMERATION,
        });
    }
    let mut found: Vec<ConstraintSet> = Vec::new();
    if is_sat(net, constraints)? {
        return Ok(found);
    }
    let m = ids.len();
    for k in 1..=m {
        // combinations of k positions in lexicographic order
        let mut pick: Vec<usize> = (0..k).collect();
        loop {
            let subset =
                ConstraintSet::from_ids(net.num_constraints(), pick.iter().map(|&i| ids[i]));
            if !found.iter().any(|f| f.is_subset(&subset)) && !is_sat(net, &subset)? {
                found.push(subset);
            }
            let Some(i) = (0..k).rev().find(|&i| pick[i] < m - k + i) else {
                break;
            };
            pick[i] += 1;
            for j in i + 1..k {
                pick[j] = pick[j - 1] + 1;
            }
        }
    }
    Ok(found)
}
