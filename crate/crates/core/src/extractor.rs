//! Dichotomic destructive core extraction.
//!
//! After a core preprocessing step, the candidate set is cut in halves of
//! the lightest constraints until removing a cut keeps the network
//! unsatisfiable (the cut is dropped) or a single constraint is found whose
//! removal makes it satisfiable (the constraint belongs to the core). After
//! each of these events an optional booster looks for more transition
//! constraints without calling the solver.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lstc::{lstc_with_rng, LstcParams};
use crate::model::{Assignment, ConstraintId, ConstraintNetwork, ConstraintSet};
use crate::rotation::rotate;
use crate::solver::{self, Outcome, SolverConfig, WeightTable};
use crate::wcore::{wcore_from, WcoreError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Dichotomy alone.
    Dc,
    /// Dichotomy with recursive model rotation.
    DcMr,
    /// Dichotomy with local search for transition constraints.
    DcLstc,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Dc, Method::DcMr, Method::DcLstc];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dc => "dc",
            Method::DcMr => "dc-mr",
            Method::DcLstc => "dc-lstc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("unknown method `{0}` (expected dc, dc-mr or dc-lstc)")]
pub struct UnknownMethod(pub String);

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

/// How a core constraint was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    Dichotomy,
    Rotation,
    LocalSearch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MucStatus {
    /// The result is a minimal unsatisfiable core.
    Complete,
    /// Time or solver budget ran out. The result holds the constraints
    /// proven to be in the core so far and is not minimal or verified.
    TimedOut,
}

impl MucStatus {
    pub fn code(self) -> &'static str {
        match self {
            MucStatus::Complete => "OK",
            MucStatus::TimedOut => "TO",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExtractParams {
    pub method: Method,
    /// Search parameters; the seed field is ignored in favour of
    /// [`ExtractParams::seed`].
    pub lstc: LstcParams,
    /// Node budget of each solver call.
    pub node_limit: Option<u64>,
    pub timeout: Option<Duration>,
    pub seed: u64,
    /// Let every solver call update the conflict weights used to rank
    /// cuts, instead of keeping the weights from preprocessing.
    pub share_weights: bool,
}

impl Default for ExtractParams {
    fn default() -> Self {
        Self {
            method: Method::DcLstc,
            lstc: LstcParams::default(),
            node_limit: None,
            timeout: None,
            seed: 0,
            share_weights: false,
        }
    }
}

impl ExtractParams {
    pub fn new(method: Method, seed: u64) -> Self {
        Self {
            method,
            seed,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExtractStats {
    /// Solver calls, including the initial check and preprocessing.
    pub mac_calls: usize,
    pub elapsed: Duration,
    pub num_variables: usize,
    pub num_constraints: usize,
    /// Constraints left after preprocessing.
    pub prep_size: usize,
    pub ls_iterations: u64,
    pub rotation_checks: u64,
}

#[derive(Clone, Debug)]
pub struct MucResult {
    pub status: MucStatus,
    pub muc: ConstraintSet,
    /// Candidate set when the run stopped; equal to `muc` when complete.
    pub remaining: ConstraintSet,
    pub provenance: BTreeMap<ConstraintId, Provenance>,
    pub stats: ExtractStats,
}

impl MucResult {
    pub fn count(&self, p: Provenance) -> usize {
        self.provenance.values().filter(|&&q| q == p).count()
    }

    pub fn by_dichotomy(&self) -> usize {
        self.count(Provenance::Dichotomy)
    }

    pub fn by_rotation(&self) -> usize {
        self.count(Provenance::Rotation)
    }

    pub fn by_ls(&self) -> usize {
        self.count(Provenance::LocalSearch)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExtractError {
    #[error("the network is satisfiable, e.g. by {}", .0.values().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))]
    Satisfiable(Assignment),
    #[error(transparent)]
    Preprocessing(#[from] WcoreError),
}

/// Hooks into the main loop, for instrumentation.
pub trait Observer {
    /// `c` joined the core while `current` was the candidate set.
    fn transition_found(
        &mut self,
        _c: ConstraintId,
        _provenance: Provenance,
        _current: &ConstraintSet,
    ) {
    }

    /// Called before each solver call of the main loop.
    fn iteration(&mut self, _current: &ConstraintSet, _muc: &ConstraintSet, _cut: &ConstraintSet) {}
}

/// Observer that does nothing.
pub struct Silent;

impl Observer for Silent {}

/// The `k` candidates with the lowest weights, ties broken by id.
pub fn choose_cut(candidates: &ConstraintSet, weights: &WeightTable, k: usize) -> ConstraintSet {
    assert!(k <= candidates.len(), "cut larger than the candidate set");
    let mut ids = candidates.to_vec();
    ids.sort_by_key(|&c| (weights.get(c), c));
    ConstraintSet::from_ids(candidates.capacity(), ids.into_iter().take(k))
}

/// Extracts one minimal unsatisfiable core of `net`.
pub fn extract_muc(
    net: &ConstraintNetwork,
    params: &ExtractParams,
) -> Result<MucResult, ExtractError> {
    extract_muc_observed(net, params, &mut Silent)
}

pub fn extract_muc_observed(
    net: &ConstraintNetwork,
    params: &ExtractParams,
    observer: &mut dyn Observer,
) -> Result<MucResult, ExtractError> {
    Extraction::new(net, params).run(observer)
}

struct Extraction<'a> {
    net: &'a ConstraintNetwork,
    params: &'a ExtractParams,
    start: Instant,
    config: SolverConfig,
    stats: ExtractStats,
    provenance: BTreeMap<ConstraintId, Provenance>,
    rng: ChaCha8Rng,
}

impl<'a> Extraction<'a> {
    fn new(net: &'a ConstraintNetwork, params: &'a ExtractParams) -> Self {
        let start = Instant::now();
        let config = SolverConfig {
            node_limit: params.node_limit,
            deadline: params.timeout.map(|t| start + t),
            restarts: None,
        };
        Self {
            net,
            params,
            start,
            config,
            stats: ExtractStats {
                num_variables: net.num_variables(),
                num_constraints: net.num_constraints(),
                ..Default::default()
            },
            provenance: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(params.seed),
        }
    }

    fn expired(&self) -> bool {
        self.config.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn finish(
        mut self,
        status: MucStatus,
        muc: ConstraintSet,
        remaining: ConstraintSet,
    ) -> MucResult {
        self.stats.elapsed = self.start.elapsed();
        MucResult {
            status,
            muc,
            remaining,
            provenance: self.provenance,
            stats: self.stats,
        }
    }

    fn record(
        &mut self,
        c: ConstraintId,
        p: Provenance,
        current: &ConstraintSet,
        observer: &mut dyn Observer,
    ) {
        self.provenance.insert(c, p);
        observer.transition_found(c, p, current);
    }

    fn run(mut self, observer: &mut dyn Observer) -> Result<MucResult, ExtractError> {
        let net = self.net;
        let all = net.all_constraints();
        let first = solver::solve(net, &all, &self.config);
        match &first.outcome {
            Outcome::Sat(a) => return Err(ExtractError::Satisfiable(a.clone())),
            Outcome::BudgetExhausted => {
                self.stats.mac_calls = 1;
                self.stats.prep_size = all.len();
                return Ok(self.finish(MucStatus::TimedOut, net.no_constraints(), all));
            }
            Outcome::Unsat => {}
        }
        let prep = wcore_from(net, &all, first, &self.config)?;
        self.stats.mac_calls = prep.mac_calls;
        self.stats.prep_size = prep.core.len();
        let mut weights = prep.weights;
        let mut current = prep.core;
        let mut muc = net.no_constraints();
        if !prep.verified {
            return Ok(self.finish(MucStatus::TimedOut, muc, current));
        }
        let mut transition: Option<Assignment> = None;
        let mut cut = choose_cut(&current, &weights, current.len().div_ceil(2));
        while !cut.is_empty() {
            debug_assert!(muc.is_subset(&current));
            debug_assert!(cut.is_subset(&current.difference(&muc)));
            if self.expired() {
                return Ok(self.finish(MucStatus::TimedOut, muc, current));
            }
            observer.iteration(&current, &muc, &cut);
            let rest = current.difference(&cut);
            let result = if self.params.share_weights {
                let r = solver::solve_with_weights(net, &rest, &self.config, weights.clone());
                weights = r.weights.clone();
                r
            } else {
                solver::solve(net, &rest, &self.config)
            };
            self.stats.mac_calls += 1;
            match result.outcome {
                Outcome::BudgetExhausted => {
                    return Ok(self.finish(MucStatus::TimedOut, muc, current));
                }
                Outcome::Sat(_) if cut.len() > 1 => {
                    cut = choose_cut(&cut, &weights, cut.len().div_ceil(2));
                    continue;
                }
                Outcome::Sat(a) => {
                    let c = cut.iter().next().expect("one constraint");
                    muc.insert(c);
                    self.record(c, Provenance::Dichotomy, &current, observer);
                    transition = Some(a);
                }
                Outcome::Unsat => {
                    current = rest;
                }
            }
            if !self.boost(&current, &mut muc, transition.as_ref(), observer) {
                return Ok(self.finish(MucStatus::TimedOut, muc, current));
            }
            let candidates = current.difference(&muc);
            cut = choose_cut(&candidates, &weights, candidates.len().div_ceil(2));
        }
        debug_assert_eq!(muc, current);
        Ok(self.finish(MucStatus::Complete, muc, current))
    }

    /// Runs the method's booster. Returns `false` when the deadline hit.
    fn boost(
        &mut self,
        current: &ConstraintSet,
        muc: &mut ConstraintSet,
        transition: Option<&Assignment>,
        observer: &mut dyn Observer,
    ) -> bool {
        let net = self.net;
        match self.params.method {
            Method::Dc => true,
            Method::DcMr => {
                let Some(a) = transition else { return true };
                // skipped if the assignment no longer exhibits one constraint
                if net.transition_within(current, a).ok().flatten().is_none() {
                    return true;
                }
                let out = rotate(net, current, muc, a).expect("checked transition assignment");
                self.stats.rotation_checks += out.checks;
                for c in out.added {
                    self.record(c, Provenance::Rotation, current, observer);
                }
                *muc = out.muc;
                true
            }
            Method::DcLstc => {
                let out = lstc_with_rng(
                    net,
                    current,
                    muc,
                    transition,
                    &self.params.lstc,
                    &mut self.rng,
                    self.config.deadline,
                );
                self.stats.ls_iterations += out.iterations;
                for c in out.added {
                    self.record(c, Provenance::LocalSearch, current, observer);
                }
                *muc = out.muc;
                !out.interrupted
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::oracle;

    #[test]
    fn cut_examples() {
        let net = fixtures::diamond();
        let all = net.all_constraints();
        let mut w = WeightTable::new(net.num_constraints());
        assert_eq!(choose_cut(&all, &w, 5), all);
        assert_eq!(net.names(&choose_cut(&all, &w, 3)), vec!["c1", "c2", "c3"]);
        let three = net.constraint_set(&["c1", "c2", "c3"]).unwrap();
        w.set(0, 5);
        w.set(1, 1);
        w.set(2, 3);
        assert_eq!(net.names(&choose_cut(&three, &w, 1)), vec!["c2"]);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("qx".parse::<Method>().is_err());
    }

    #[test]
    fn ordering_every_method() {
        let net = fixtures::ordering();
        let expected = net.constraint_set(&["c4", "c5", "c6"]).unwrap();
        for method in Method::ALL {
            for seed in 0..5 {
                let r = extract_muc(&net, &ExtractParams::new(method, seed)).unwrap();
                assert_eq!(r.status, MucStatus::Complete);
                assert_eq!(r.muc, expected, "{method} seed {seed}");
                assert_eq!(r.provenance.len(), 3);
                assert!(r.stats.mac_calls >= 1);
            }
        }
    }

    #[test]
    fn diamond_every_method() {
        let net = fixtures::diamond();
        let mucs = oracle::all_mucs(&net, &net.all_constraints()).unwrap();
        for method in Method::ALL {
            for seed in 0..5 {
                let r = extract_muc(&net, &ExtractParams::new(method, seed)).unwrap();
                assert!(mucs.contains(&r.muc), "{method} seed {seed}");
            }
        }
    }

    #[test]
    fn minimal_input_is_returned() {
        let net = fixtures::lt_triangle();
        for method in Method::ALL {
            let r = extract_muc(&net, &ExtractParams::new(method, 1)).unwrap();
            assert_eq!(r.muc, net.all_constraints());
            assert_eq!(r.stats.prep_size, 3);
        }
    }

    #[test]
    fn satisfiable_input_is_an_error() {
        let net = fixtures::not_equal_clique(3, 3);
        assert!(matches!(
            extract_muc(&net, &ExtractParams::default()),
            Err(ExtractError::Satisfiable(_))
        ));
    }

    #[test]
    fn zero_timeout_is_partial() {
        let net = fixtures::not_equal_clique(8, 3);
        let params = ExtractParams {
            timeout: Some(Duration::ZERO),
            ..ExtractParams::default()
        };
        let r = extract_muc(&net, &params).unwrap();
        assert_eq!(r.status, MucStatus::TimedOut);
        assert!(r.muc.is_subset(&r.remaining));
    }

    #[test]
    fn shared_weights_still_give_a_core() {
        let net = fixtures::ordering();
        let params = ExtractParams {
            share_weights: true,
            method: Method::Dc,
            ..Default::default()
        };
        let r = extract_muc(&net, &params).unwrap();
        assert_eq!(net.names(&r.muc), vec!["c4", "c5", "c6"]);
    }
}
