//! Complete backtracking search maintaining arc consistency (MAC over AC3)
//! with the dom/wdeg variable ordering.
//!
//! Besides the verdict, a solve reports which constraints were *active*,
//! i.e. removed at least one value by propagation anywhere in the search,
//! and the final conflict weights. Both feed core extraction.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;

use crate::model::{Assignment, ConstraintId, ConstraintNetwork, ConstraintSet, VarId};

/// Per-constraint conflict counters, all starting at 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightTable(Vec<u64>);

impl WeightTable {
    pub fn new(num_constraints: usize) -> Self {
        Self(vec![1; num_constraints])
    }

    pub fn get(&self, c: ConstraintId) -> u64 {
        self.0[c]
    }

    pub fn bump(&mut self, c: ConstraintId) {
        self.0[c] += 1;
    }

    pub fn set(&mut self, c: ConstraintId, w: u64) {
        assert!(w >= 1, "weights are at least 1");
        self.0[c] = w;
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }
}

/// Current domains as bitsets over domain positions, with a trail for
/// backtracking.
#[derive(Clone, Debug)]
pub struct DomainStore {
    present: Vec<FixedBitSet>,
    sizes: Vec<usize>,
    trail: Vec<(VarId, usize)>,
}

impl DomainStore {
    pub fn new(net: &ConstraintNetwork) -> Self {
        let present = net
            .variables()
            .iter()
            .map(|v| {
                let mut b = FixedBitSet::with_capacity(v.domain.len());
                b.insert_range(..);
                b
            })
            .collect();
        let sizes = net.variables().iter().map(|v| v.domain.len()).collect();
        Self {
            present,
            sizes,
            trail: Vec::new(),
        }
    }

    pub fn size(&self, x: VarId) -> usize {
        self.sizes[x]
    }

    pub fn is_wiped_out(&self, x: VarId) -> bool {
        self.sizes[x] == 0
    }

    pub fn contains(&self, x: VarId, idx: usize) -> bool {
        self.present[x].contains(idx)
    }

    /// Remaining domain positions of `x`, ascending.
    pub fn positions(&self, x: VarId) -> impl Iterator<Item = usize> + '_ {
        self.present[x].ones()
    }

    pub fn remove(&mut self, x: VarId, idx: usize) -> bool {
        if !self.present[x].contains(idx) {
            return false;
        }
        self.present[x].set(idx, false);
        self.sizes[x] -= 1;
        self.trail.push((x, idx));
        true
    }

    pub fn mark(&self) -> usize {
        self.trail.len()
    }

    /// Undoes every removal made after `mark`.
    pub fn restore(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (x, idx) = self.trail.pop().expect("non-empty trail");
            self.present[x].insert(idx);
            self.sizes[x] += 1;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RestartPolicy {
    /// Nodes before the first restart.
    pub first_cutoff: u64,
    /// Multiplier applied to the cutoff after each restart.
    pub growth: f64,
}

#[derive(Clone, Debug, Default)]
pub struct SolverConfig {
    pub node_limit: Option<u64>,
    pub deadline: Option<Instant>,
    /// Off by default; weights persist across restarts of one solve.
    pub restarts: Option<RestartPolicy>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Sat(Assignment),
    Unsat,
    BudgetExhausted,
}

impl Outcome {
    pub fn is_sat(&self) -> bool {
        matches!(self, Outcome::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, Outcome::Unsat)
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveStats {
    pub nodes: u64,
    pub revisions: u64,
    pub restarts: u64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub outcome: Outcome,
    /// Constraints that removed at least one value during the search.
    pub active: ConstraintSet,
    pub weights: WeightTable,
    pub stats: SolveStats,
}

/// Solves the sub-network made of `constraints`.
pub fn solve(
    net: &ConstraintNetwork,
    constraints: &ConstraintSet,
    config: &SolverConfig,
) -> SolveResult {
    solve_with_weights(
        net,
        constraints,
        config,
        WeightTable::new(net.num_constraints()),
    )
}

/// As [`solve`], starting from the given conflict weights.
pub fn solve_with_weights(
    net: &ConstraintNetwork,
    constraints: &ConstraintSet,
    config: &SolverConfig,
    weights: WeightTable,
) -> SolveResult {
    let start = Instant::now();
    let mut mac = Mac::with_weights(net, constraints, weights);
    let outcome = mac.search(config);
    debug_assert!(match &outcome {
        Outcome::Sat(a) => net
            .violated_within(constraints, a)
            .is_ok_and(|v| v.is_empty()),
        _ => true,
    });
    let mut stats = mac.stats;
    stats.elapsed = start.elapsed();
    SolveResult {
        outcome,
        active: mac.active,
        weights: mac.weights,
        stats,
    }
}

struct Frame {
    var: VarId,
    values: Vec<usize>,
    next: usize,
    mark: usize,
}

/// MAC search state over one sub-network.
pub struct Mac<'a> {
    net: &'a ConstraintNetwork,
    enabled: ConstraintSet,
    var_cons: Vec<Vec<ConstraintId>>,
    store: DomainStore,
    weights: WeightTable,
    active: ConstraintSet,
    queue: VecDeque<(ConstraintId, usize)>,
    arc_base: Vec<usize>,
    queued: FixedBitSet,
    stats: SolveStats,
    lists: Vec<Vec<usize>>,
    tuple: Vec<usize>,
    cursor: Vec<usize>,
}

impl<'a> Mac<'a> {
    pub fn new(net: &'a ConstraintNetwork, constraints: &ConstraintSet) -> Self {
        Self::with_weights(net, constraints, WeightTable::new(net.num_constraints()))
    }

    pub fn with_weights(
        net: &'a ConstraintNetwork,
        constraints: &ConstraintSet,
        weights: WeightTable,
    ) -> Self {
        let var_cons = (0..net.num_variables())
            .map(|x| {
                net.constraints_on(x)
                    .iter()
                    .copied()
                    .filter(|&c| constraints.contains(c))
                    .collect()
            })
            .collect();
        let mut arc_base = Vec::with_capacity(net.num_constraints());
        let mut total = 0;
        for c in net.constraints() {
            arc_base.push(total);
            total += c.scope.len();
        }
        Self {
            net,
            enabled: constraints.clone(),
            var_cons,
            store: DomainStore::new(net),
            weights,
            active: net.no_constraints(),
            queue: VecDeque::new(),
            arc_base,
            queued: FixedBitSet::with_capacity(total),
            stats: SolveStats::default(),
            lists: Vec::new(),
            tuple: Vec::new(),
            cursor: Vec::new(),
        }
    }

    pub fn store(&self) -> &DomainStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut DomainStore {
        &mut self.store
    }

    pub fn active(&self) -> &ConstraintSet {
        &self.active
    }

    pub fn weights(&self) -> &WeightTable {
        &self.weights
    }

    /// Removes the values of `x` without support on `c`. Returns whether
    /// anything was removed; `c` is then marked active.
    pub fn revise(&mut self, c: ConstraintId, x: VarId) -> bool {
        let pos = self
            .net
            .constraint(c)
            .scope
            .iter()
            .position(|&v| v == x)
            .expect("variable in scope");
        self.revise_at(c, pos)
    }

    fn revise_at(&mut self, c: ConstraintId, pos: usize) -> bool {
        self.stats.revisions += 1;
        let net = self.net;
        let scope = &net.constraint(c).scope;
        let x = scope[pos];
        let arity = scope.len();
        self.lists.resize_with(arity, Vec::new);
        for (i, &v) in scope.iter().enumerate() {
            self.lists[i].clear();
            self.lists[i].extend(self.store.positions(v));
        }
        self.tuple.resize(arity, 0);
        self.cursor.resize(arity, 0);
        let mut removed = false;
        for k in 0..self.lists[pos].len() {
            let a = self.lists[pos][k];
            if !self.has_support(c, pos, a) {
                self.store.remove(x, a);
                removed = true;
            }
        }
        if removed {
            self.active.insert(c);
        }
        removed
    }

    fn has_support(&mut self, c: ConstraintId, pos: usize, a: usize) -> bool {
        let k = self.lists.len();
        for i in 0..k {
            if i != pos && self.lists[i].is_empty() {
                return false;
            }
            self.cursor[i] = 0;
            self.tuple[i] = if i == pos { a } else { self.lists[i][0] };
        }
        loop {
            if self.net.allows_tuple(c, &self.tuple) {
                return true;
            }
            let mut i = k;
            loop {
                if i == 0 {
                    return false;
                }
                i -= 1;
                if i == pos {
                    continue;
                }
                self.cursor[i] += 1;
                if self.cursor[i] < self.lists[i].len() {
                    self.tuple[i] = self.lists[i][self.cursor[i]];
                    break;
                }
                self.cursor[i] = 0;
                self.tuple[i] = self.lists[i][0];
            }
        }
    }

    fn enqueue(&mut self, c: ConstraintId, pos: usize) {
        let slot = self.arc_base[c] + pos;
        if !self.queued.contains(slot) {
            self.queued.insert(slot);
            self.queue.push_back((c, pos));
        }
    }

    /// Queues the arcs that may lose support after `x` changed because of
    /// `cause` (or a decision when `None`).
    fn enqueue_neighbors(&mut self, x: VarId, cause: Option<ConstraintId>) {
        for i in 0..self.var_cons[x].len() {
            let c2 = self.var_cons[x][i];
            let arity = self.net.constraint(c2).scope.len();
            if Some(c2) == cause && arity == 2 {
                continue;
            }
            for q in 0..arity {
                if self.net.constraint(c2).scope[q] != x {
                    self.enqueue(c2, q);
                }
            }
        }
    }

    fn clear_queue(&mut self) {
        self.queue.clear();
        self.queued.clear();
    }

    /// Runs AC3 from the given arcs to a fixpoint. Returns `false` on a
    /// wipeout, after bumping the weight of the constraint that caused it.
    pub fn propagate(&mut self, seed: impl IntoIterator<Item = (ConstraintId, VarId)>) -> bool {
        for (c, x) in seed {
            let pos = self
                .net
                .constraint(c)
                .scope
                .iter()
                .position(|&v| v == x)
                .expect("variable in scope");
            self.enqueue(c, pos);
        }
        self.run_queue()
    }

    /// Every arc of the sub-network.
    pub fn propagate_all(&mut self) -> bool {
        let cs = self.enabled.to_vec();
        for c in cs {
            for pos in 0..self.net.constraint(c).scope.len() {
                self.enqueue(c, pos);
            }
        }
        self.run_queue()
    }

    fn run_queue(&mut self) -> bool {
        while let Some((c, pos)) = self.queue.pop_front() {
            self.queued.set(self.arc_base[c] + pos, false);
            if self.revise_at(c, pos) {
                let x = self.net.constraint(c).scope[pos];
                if self.store.is_wiped_out(x) {
                    self.weights.bump(c);
                    self.clear_queue();
                    return false;
                }
                self.enqueue_neighbors(x, Some(c));
            }
        }
        true
    }

    /// dom/wdeg: smallest |dom| / weighted degree among unfixed variables.
    /// A zero weighted degree ranks as +inf; ties go to the smaller domain,
    /// then the smaller index.
    fn select_variable(&self) -> Option<VarId> {
        let mut best: Option<(VarId, u128, u128)> = None;
        for x in 0..self.net.num_variables() {
            let dom = self.store.size(x);
            if dom <= 1 {
                continue;
            }
            let wdeg: u64 = self.var_cons[x]
                .iter()
                .filter(|&&c| {
                    self.net
                        .constraint(c)
                        .scope
                        .iter()
                        .any(|&y| y != x && self.store.size(y) > 1)
                })
                .map(|&c| self.weights.get(c))
                .sum();
            let (dom, wdeg) = (dom as u128, wdeg as u128);
            let better = match best {
                None => true,
                Some((_, bd, bw)) => {
                    let ratio = match (wdeg, bw) {
                        (0, 0) => std::cmp::Ordering::Equal,
                        (0, _) => std::cmp::Ordering::Greater,
                        (_, 0) => std::cmp::Ordering::Less,
                        _ => (dom * bw).cmp(&(bd * wdeg)),
                    };
                    ratio.then(dom.cmp(&bd)).is_lt()
                }
            };
            if better {
                best = Some((x, dom, wdeg));
            }
        }
        best.map(|(x, _, _)| x)
    }

    fn assign(&mut self, x: VarId, value: usize) {
        let others: Vec<usize> = self.store.positions(x).filter(|&i| i != value).collect();
        for i in others {
            self.store.remove(x, i);
        }
    }

    fn solution(&self) -> Assignment {
        let idx: Vec<usize> = (0..self.net.num_variables())
            .map(|x| self.store.positions(x).next().expect("non-empty domain"))
            .collect();
        Assignment::from_indices(self.net, &idx)
    }

    fn out_of_budget(&self, config: &SolverConfig) -> bool {
        config.node_limit.is_some_and(|l| self.stats.nodes >= l)
            || config.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn search(&mut self, config: &SolverConfig) -> Outcome {
        if !self.propagate_all() {
            return Outcome::Unsat;
        }
        let root = self.store.mark();
        let mut stack: Vec<Frame> = Vec::new();
        let mut cutoff = config.restarts.map(|r| r.first_cutoff.max(1));
        let mut since_restart = 0u64;
        loop {
            let Some(x) = self.select_variable() else {
                return Outcome::Sat(self.solution());
            };
            stack.push(Frame {
                var: x,
                values: self.store.positions(x).collect(),
                next: 0,
                mark: self.store.mark(),
            });
            loop {
                let Some(frame) = stack.last_mut() else {
                    return Outcome::Unsat;
                };
                self.store.restore(frame.mark);
                if frame.next == frame.values.len() {
                    stack.pop();
                    continue;
                }
                let (x, v) = (frame.var, frame.values[frame.next]);
                frame.next += 1;
                if self.out_of_budget(config) {
                    return Outcome::BudgetExhausted;
                }
                if let Some(limit) = cutoff {
                    if since_restart >= limit {
                        stack.clear();
                        self.store.restore(root);
                        let growth = config.restarts.map_or(1.0, |r| r.growth).max(1.0);
                        cutoff = Some(((limit as f64) * growth).ceil() as u64 + 1);
                        since_restart = 0;
                        self.stats.restarts += 1;
                        break;
                    }
                }
                self.stats.nodes += 1;
                since_restart += 1;
                self.assign(x, v);
                if self.run_after_decision(x) {
                    break;
                }
            }
        }
    }

    fn run_after_decision(&mut self, x: VarId) -> bool {
        self.enqueue_neighbors(x, None);
        self.run_queue()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::NetworkBuilder;

    fn net_xy(
        dx: std::ops::RangeInclusive<i64>,
        dy: std::ops::RangeInclusive<i64>,
        expr: &str,
    ) -> ConstraintNetwork {
        let mut b = NetworkBuilder::new();
        b.variable("x", dx).unwrap();
        b.variable("y", dy).unwrap();
        b.expr_constraint("c", &["x", "y"], expr).unwrap();
        b.build()
    }

    fn values(net: &ConstraintNetwork, mac: &Mac, x: VarId) -> Vec<i64> {
        mac.store()
            .positions(x)
            .map(|i| net.variable(x).domain[i])
            .collect()
    }

    #[test]
    fn revise_removes_unsupported() {
        let net = net_xy(0..=4, 0..=2, "lt(x,y)");
        let all = net.all_constraints();
        let mut mac = Mac::new(&net, &all);
        assert!(mac.revise(0, 0));
        assert_eq!(values(&net, &mac, 0), vec![0, 1]);
        assert!(mac.active().contains(0));
        // nothing left to remove
        assert!(!mac.revise(0, 0));
        assert_eq!(values(&net, &mac, 0), vec![0, 1]);
    }

    #[test]
    fn revise_wipes_out() {
        let net = net_xy(0..=4, 0..=0, "lt(x,y)");
        let all = net.all_constraints();
        let mut mac = Mac::new(&net, &all);
        assert!(mac.revise(0, 0));
        assert!(mac.store().is_wiped_out(0));
    }

    #[test]
    fn propagate_unreachable_constant() {
        let mut b = NetworkBuilder::new();
        b.variable("x", 0..=4).unwrap();
        b.expr_constraint("c", &["x"], "eq(x,7)").unwrap();
        let net = b.build();
        let all = net.all_constraints();
        let mut mac = Mac::new(&net, &all);
        assert!(!mac.propagate([(0, 0)]));
        assert_eq!(mac.weights().get(0), 2);
    }

    #[test]
    fn propagate_without_constraints() {
        let net = fixtures::ordering().without_constraints();
        let all = net.all_constraints();
        let mut mac = Mac::new(&net, &all);
        assert!(mac.propagate_all());
        assert!((0..5).all(|x| mac.store().size(x) == 5));
    }

    #[test]
    fn trail_restores_domains() {
        let net = fixtures::ordering();
        let mut store = DomainStore::new(&net);
        let m = store.mark();
        store.remove(0, 1);
        store.remove(0, 3);
        assert!(!store.remove(0, 1));
        assert_eq!(store.size(0), 3);
        store.restore(m);
        assert_eq!(store.size(0), 5);
        assert_eq!(store.positions(0).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn ordering_is_unsat() {
        let net = fixtures::ordering();
        let r = solve(&net, &net.all_constraints(), &SolverConfig::default());
        assert_eq!(r.outcome, Outcome::Unsat);
        assert!(!r.active.is_empty());
    }

    #[test]
    fn ordering_without_c4_is_sat() {
        let net = fixtures::ordering();
        let mut set = net.all_constraints();
        set.remove(net.constraint_id("c4").unwrap());
        let r = solve(&net, &set, &SolverConfig::default());
        let Outcome::Sat(a) = &r.outcome else {
            panic!("expected a solution");
        };
        assert!(net.violated_within(&set, a).unwrap().is_empty());
        let witness =
            Assignment::from_pairs(&net, &[("i", 2), ("j", 0), ("k", 1), ("l", 2), ("m", 4)])
                .unwrap();
        assert!(net.violated_within(&set, &witness).unwrap().is_empty());
    }

    #[test]
    fn lone_variable_takes_smallest_value() {
        let mut b = NetworkBuilder::new();
        b.variable("x", [3, 5, 8]).unwrap();
        let net = b.build();
        let r = solve(&net, &net.all_constraints(), &SolverConfig::default());
        assert_eq!(
            r.outcome,
            Outcome::Sat(Assignment::new(&net, vec![3]).unwrap())
        );
    }

    #[test]
    fn node_budget_is_reported() {
        let net = fixtures::not_equal_clique(9, 8);
        let config = SolverConfig {
            node_limit: Some(3),
            ..Default::default()
        };
        let r = solve(&net, &net.all_constraints(), &config);
        assert_eq!(r.outcome, Outcome::BudgetExhausted);
        assert_eq!(r.stats.nodes, 3);
    }

    #[test]
    fn restarts_keep_completeness() {
        let net = fixtures::not_equal_clique(6, 5);
        let config = SolverConfig {
            restarts: Some(RestartPolicy {
                first_cutoff: 2,
                growth: 1.5,
            }),
            ..Default::default()
        };
        let r = solve(&net, &net.all_constraints(), &config);
        assert_eq!(r.outcome, Outcome::Unsat);
        assert!(r.stats.restarts > 0);
    }
}
