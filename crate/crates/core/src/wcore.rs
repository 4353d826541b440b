//! Core preprocessing: repeatedly re-solve the sub-network made of the
//! constraints that were active in the previous refutation, until the
//! active set stops shrinking.

use crate::model::{ConstraintNetwork, ConstraintSet};
use crate::solver::{self, Outcome, SolveResult, SolverConfig, WeightTable};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WcoreError {
    /// A sub-network expected to be unsatisfiable was solved.
    #[error("iteration {iteration}: sub-network of {size} constraints is satisfiable")]
    InternalContradiction { iteration: usize, size: usize },
}

#[derive(Clone, Debug)]
pub struct WcoreResult {
    pub core: ConstraintSet,
    /// Weights of the last solve, used to rank constraints downstream.
    pub weights: WeightTable,
    /// Number of solver calls made.
    pub mac_calls: usize,
    /// `false` when a solver budget ran out; `core` is then the best set
    /// known to be unsatisfiable, not a fixpoint.
    pub verified: bool,
}

/// Shrinks `constraints` to the fixpoint of the active-set iteration.
pub fn wcore(
    net: &ConstraintNetwork,
    constraints: &ConstraintSet,
    config: &SolverConfig,
) -> Result<WcoreResult, WcoreError> {
    let first = solver::solve(net, constraints, config);
    wcore_from(net, constraints, first, config)
}

/// Continues the iteration from a finished solve of `constraints`.
pub(crate) fn wcore_from(
    net: &ConstraintNetwork,
    constraints: &ConstraintSet,
    first: SolveResult,
    config: &SolverConfig,
) -> Result<WcoreResult, WcoreError> {
    let mut current = constraints.clone();
    let mut last = first;
    let mut mac_calls = 1;
    let mut iteration = 0;
    loop {
        match last.outcome {
            Outcome::Sat(_) => {
                return Err(WcoreError::InternalContradiction {
                    iteration,
                    size: current.len(),
                })
            }
            Outcome::BudgetExhausted => {
                return Ok(WcoreResult {
                    core: current,
                    weights: last.weights,
                    mac_calls,
                    verified: false,
                })
            }
            Outcome::Unsat => {}
        }
        debug_assert!(last.active.is_subset(&current));
        // stop when the active set equals the current one
        if last.active == current {
            return Ok(WcoreResult {
                core: current,
                weights: last.weights,
                mac_calls,
                verified: true,
            });
        }
        current = last.active.clone();
        iteration += 1;
        last = solver::solve_with_weights(net, &current, config, last.weights);
        mac_calls += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn muc_is_its_own_core() {
        let net = fixtures::lt_triangle();
        let r = wcore(&net, &net.all_constraints(), &SolverConfig::default()).unwrap();
        assert_eq!(r.core, net.all_constraints());
        assert!(r.verified);
    }

    #[test]
    fn ordering_core_contains_the_muc() {
        let net = fixtures::ordering();
        let r = wcore(&net, &net.all_constraints(), &SolverConfig::default()).unwrap();
        let muc = net.constraint_set(&["c4", "c5", "c6"]).unwrap();
        assert!(muc.is_subset(&r.core));
        assert!(
            crate::oracle::brute_sat(&net, &r.core, crate::oracle::DEFAULT_BOUND)
                .unwrap()
                .is_none()
        );
    }

    #[test]
    fn satisfiable_input_is_a_contradiction() {
        let net = fixtures::ordering();
        let mut set = net.all_constraints();
        set.remove(net.constraint_id("c4").unwrap());
        assert!(matches!(
            wcore(&net, &set, &SolverConfig::default()),
            Err(WcoreError::InternalContradiction { iteration: 0, .. })
        ));
    }

    #[test]
    fn exhausted_budget_is_unverified() {
        let net = fixtures::not_equal_clique(9, 8);
        let config = SolverConfig {
            node_limit: Some(2),
            ..Default::default()
        };
        let r = wcore(&net, &net.all_constraints(), &config).unwrap();
        assert!(!r.verified);
        assert_eq!(r.core, net.all_constraints());
    }
}
