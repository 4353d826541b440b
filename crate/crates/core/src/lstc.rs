//! Local search for transition constraints.
//!
//! A weighted random walk over total assignments. Whenever it sits in a
//! local minimum that falsifies exactly one constraint, that constraint is
//! a transition constraint: new ones are recorded and buy extra
//! iterations, known ones cost iterations and get heavier so the walk moves
//! elsewhere. Constraints already known to be in the core are weighted so
//! that the walk satisfies them first.
//!
//! Move scores are maintained incrementally; [`objective`] and
//! [`is_local_minimum`] give the reference definitions.

use std::time::Instant;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Assignment, ConstraintId, ConstraintNetwork, ConstraintSet, ModelError, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EscapeStrategy {
    /// With probability `noise` a random change on a falsified constraint,
    /// otherwise the least damaging change among falsified constraints'
    /// variables.
    RandomWalk,
    /// R-Novelty on a randomly chosen falsified constraint.
    RNovelty,
}

#[derive(Clone, Debug)]
pub struct LstcParams {
    pub initial_iterations: u64,
    pub bonus: u64,
    pub seed: u64,
    pub escape: EscapeStrategy,
    pub noise: f64,
    /// Record transition constraints found at local minima. Turning this
    /// off leaves a plain weighted random walk.
    pub mining: bool,
    /// Keep every move in [`LstcOutcome::trace`].
    pub record_trace: bool,
}

impl Default for LstcParams {
    fn default() -> Self {
        Self {
            initial_iterations: 10_000,
            bonus: 10_000,
            seed: 0,
            escape: EscapeStrategy::RandomWalk,
            noise: 0.3,
            mining: true,
            record_trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoveKind {
    Improve,
    Escape,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Move {
    pub var: VarId,
    /// Domain value (not position) after the move.
    pub value: i64,
    pub kind: MoveKind,
}

#[derive(Clone, Debug)]
pub struct LstcOutcome {
    pub muc: ConstraintSet,
    /// Constraints added to the input set, in discovery order.
    pub added: Vec<ConstraintId>,
    pub iterations: u64,
    pub local_minima: u64,
    /// One entry per iteration; `None` when no move was possible.
    pub trace: Vec<Option<Move>>,
    /// Stopped by the deadline rather than by the iteration budget.
    pub interrupted: bool,
}

/// Per-constraint search weights plus the set of constraints that must be
/// satisfied first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchWeights {
    base: Vec<u64>,
    priority: ConstraintSet,
}

impl SearchWeights {
    pub fn new(net: &ConstraintNetwork) -> Self {
        Self {
            base: vec![1; net.num_constraints()],
            priority: net.no_constraints(),
        }
    }

    pub fn with_priority(net: &ConstraintNetwork, priority: &ConstraintSet) -> Self {
        Self {
            base: vec![1; net.num_constraints()],
            priority: priority.clone(),
        }
    }

    pub fn base(&self, c: ConstraintId) -> u64 {
        self.base[c]
    }

    pub fn set_base(&mut self, c: ConstraintId, w: u64) {
        assert!(w >= 1, "weights are at least 1");
        self.base[c] = w;
    }

    pub fn priority(&self) -> &ConstraintSet {
        &self.priority
    }

    /// Added to every priority constraint: one more than the total weight
    /// of the other constraints of `constraints`.
    pub fn offset(&self, constraints: &ConstraintSet) -> u64 {
        1 + constraints
            .iter()
            .filter(|&c| !self.priority.contains(c))
            .map(|c| self.base[c])
            .sum::<u64>()
    }

    pub fn effective(&self, constraints: &ConstraintSet, c: ConstraintId) -> u64 {
        if self.priority.contains(c) {
            self.base[c] + self.offset(constraints)
        } else {
            self.base[c]
        }
    }
}

/// Sum of the effective weights of the constraints of `constraints`
/// falsified by `a`.
pub fn objective(
    net: &ConstraintNetwork,
    constraints: &ConstraintSet,
    weights: &SearchWeights,
    a: &Assignment,
) -> Result<u64, ModelError> {
    Ok(net
        .violated_within(constraints, a)?
        .iter()
        .map(|c| weights.effective(constraints, c))
        .sum())
}

/// Whether no single-variable change strictly decreases [`objective`].
pub fn is_local_minimum(
    net: &ConstraintNetwork,
    constraints: &ConstraintSet,
    weights: &SearchWeights,
    a: &Assignment,
) -> Result<bool, ModelError> {
    let here = objective(net, constraints, weights, a)?;
    for (x, var) in net.variables().iter().enumerate() {
        for &v in &var.domain {
            if v != a.get(x) && objective(net, constraints, weights, &a.with(x, v))? < here {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Runs the search on the sub-network `constraints`, extending `c_muc`.
/// Starts from `start` when given, otherwise from a uniform random
/// assignment.
pub fn lstc(
    net: &ConstraintNetwork,
    constraints: &ConstraintSet,
    c_muc: &ConstraintSet,
    start: Option<&Assignment>,
    params: &LstcParams,
) -> LstcOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    lstc_with_rng(net, constraints, c_muc, start, params, &mut rng, None)
}

/// As [`lstc`] with a caller-owned generator and an optional deadline.
pub fn lstc_with_rng<R: Rng>(
    net: &ConstraintNetwork,
    constraints: &ConstraintSet,
    c_muc: &ConstraintSet,
    start: Option<&Assignment>,
    params: &LstcParams,
    rng: &mut R,
    deadline: Option<Instant>,
) -> LstcOutcome {
    assert!(
        (0.0..=1.0).contains(&params.noise),
        "noise must lie in [0,1]"
    );
    let initial = match start {
        Some(a) => a.to_indices(net),
        None => net
            .variables()
            .iter()
            .map(|v| rng.gen_range(0..v.domain.len()))
            .collect(),
    };
    let mut walk = Walker::new(net, constraints, c_muc, initial);
    walk.run(params, rng, deadline)
}

struct Walker<'a> {
    net: &'a ConstraintNetwork,
    #[cfg_attr(not(test), allow(dead_code))]
    constraints: ConstraintSet,
    cons: Vec<ConstraintId>,
    var_cons: Vec<Vec<ConstraintId>>,
    neighbors: Vec<Vec<VarId>>,
    cur: Vec<usize>,
    violated: FixedBitSet,
    n_violated: usize,
    base: Vec<u64>,
    muc: ConstraintSet,
    offset: u64,
    score: Vec<Vec<i64>>,
    last_changed: Vec<u64>,
    iteration: u64,
    escapes: u64,
}

impl<'a> Walker<'a> {
    fn new(
        net: &'a ConstraintNetwork,
        constraints: &ConstraintSet,
        c_muc: &ConstraintSet,
        cur: Vec<usize>,
    ) -> Self {
        let n = net.num_variables();
        let var_cons: Vec<Vec<ConstraintId>> = (0..n)
            .map(|x| {
                net.constraints_on(x)
                    .iter()
                    .copied()
                    .filter(|&c| constraints.contains(c))
                    .collect()
            })
            .collect();
        let neighbors = (0..n)
            .map(|x| {
                let mut ns: Vec<VarId> = var_cons[x]
                    .iter()
                    .flat_map(|&c| net.constraint(c).scope.iter().copied())
                    .filter(|&y| y != x)
                    .collect();
                ns.sort_unstable();
                ns.dedup();
                ns
            })
            .collect();
        let score = net
            .variables()
            .iter()
            .map(|v| vec![0; v.domain.len()])
            .collect();
        let mut w = Self {
            net,
            constraints: constraints.clone(),
            cons: constraints.to_vec(),
            var_cons,
            neighbors,
            cur,
            violated: FixedBitSet::with_capacity(net.num_constraints()),
            n_violated: 0,
            base: vec![1; net.num_constraints()],
            muc: c_muc.clone(),
            offset: 0,
            score,
            last_changed: vec![0; n],
            iteration: 0,
            escapes: 0,
        };
        for i in 0..w.cons.len() {
            let c = w.cons[i];
            if !w.holds_now(c) {
                w.violated.insert(c);
                w.n_violated += 1;
            }
        }
        w.refresh_offset();
        w
    }

    fn holds_now(&self, c: ConstraintId) -> bool {
        self.net.allows(c, |y| self.cur[y])
    }

    fn refresh_offset(&mut self) {
        self.offset = 1 + self
            .cons
            .iter()
            .filter(|&&c| !self.muc.contains(c))
            .map(|&c| self.base[c])
            .sum::<u64>();
        for x in 0..self.cur.len() {
            self.rescore(x);
        }
    }

    fn effective(&self, c: ConstraintId) -> i64 {
        let w = if self.muc.contains(c) {
            self.base[c] + self.offset
        } else {
            self.base[c]
        };
        w as i64
    }

    fn rescore(&mut self, y: VarId) {
        let d = self.score[y].len();
        for v in 0..d {
            let mut delta = 0;
            if v != self.cur[y] {
                for &c in &self.var_cons[y] {
                    let after = self.net.allows(c, |z| if z == y { v } else { self.cur[z] });
                    let before = !self.violated.contains(c);
                    if before && !after {
                        delta += self.effective(c);
                    } else if !before && after {
                        delta -= self.effective(c);
                    }
                }
            }
            self.score[y][v] = delta;
        }
    }

    fn apply(&mut self, x: VarId, v: usize) {
        self.cur[x] = v;
        self.last_changed[x] = self.iteration;
        for i in 0..self.var_cons[x].len() {
            let c = self.var_cons[x][i];
            let ok = self.holds_now(c);
            let was_violated = self.violated.contains(c);
            if ok && was_violated {
                self.violated.set(c, false);
                self.n_violated -= 1;
            } else if !ok && !was_violated {
                self.violated.insert(c);
                self.n_violated += 1;
            }
        }
        self.rescore(x);
        for i in 0..self.neighbors[x].len() {
            let y = self.neighbors[x][i];
            self.rescore(y);
        }
    }

    fn best_score(&self) -> Option<i64> {
        self.score
            .iter()
            .enumerate()
            .flat_map(|(x, row)| {
                row.iter()
                    .enumerate()
                    .filter(move |&(v, _)| v != self.cur[x])
                    .map(|(_, &s)| s)
            })
            .min()
    }

    fn violated_list(&self) -> Vec<ConstraintId> {
        self.cons
            .iter()
            .copied()
            .filter(|&c| self.violated.contains(c))
            .collect()
    }

    /// Moves `(x, v)` over `vars` with the smallest score, in (x, v) order.
    fn best_moves(&self, vars: impl Iterator<Item = VarId>) -> Vec<(VarId, usize)> {
        let mut best = i64::MAX;
        let mut out = Vec::new();
        for x in vars {
            for (v, &s) in self.score[x].iter().enumerate() {
                if v == self.cur[x] {
                    continue;
                }
                if s < best {
                    best = s;
                    out.clear();
                }
                if s == best {
                    out.push((x, v));
                }
            }
        }
        out
    }

    fn pick<R: Rng>(rng: &mut R, moves: &[(VarId, usize)]) -> Option<(VarId, usize)> {
        if moves.is_empty() {
            None
        } else {
            Some(moves[rng.gen_range(0..moves.len())])
        }
    }

    fn random_move<R: Rng>(&self, rng: &mut R) -> Option<(VarId, usize)> {
        let violated = self.violated_list();
        let vars: Vec<VarId> = if violated.is_empty() {
            (0..self.cur.len())
                .filter(|&x| self.score[x].len() > 1)
                .collect()
        } else {
            let c = violated[rng.gen_range(0..violated.len())];
            self.net
                .constraint(c)
                .scope
                .iter()
                .copied()
                .filter(|&x| self.score[x].len() > 1)
                .collect()
        };
        if vars.is_empty() {
            return None;
        }
        let x = vars[rng.gen_range(0..vars.len())];
        let r = rng.gen_range(0..self.score[x].len() - 1);
        Some((x, if r >= self.cur[x] { r + 1 } else { r }))
    }

    fn escape_random_walk<R: Rng>(&self, noise: f64, rng: &mut R) -> Option<(VarId, usize)> {
        if rng.gen_bool(noise) {
            return self.random_move(rng);
        }
        let violated = self.violated_list();
        let moves = if violated.is_empty() {
            self.best_moves(0..self.cur.len())
        } else {
            let mut vars: Vec<VarId> = violated
                .iter()
                .flat_map(|&c| self.net.constraint(c).scope.iter().copied())
                .collect();
            vars.sort_unstable();
            vars.dedup();
            self.best_moves(vars.into_iter())
        };
        Self::pick(rng, &moves)
    }

    fn escape_rnovelty<R: Rng>(&mut self, noise: f64, rng: &mut R) -> Option<(VarId, usize)> {
        self.escapes += 1;
        let violated = self.violated_list();
        if violated.is_empty() || self.escapes.is_multiple_of(100) {
            return self.random_move(rng);
        }
        let c = violated[rng.gen_range(0..violated.len())];
        // best value per variable of the constraint
        let mut ranked: Vec<(i64, u64, VarId, usize)> = Vec::new();
        for &x in &self.net.constraint(c).scope {
            let best = self.score[x]
                .iter()
                .enumerate()
                .filter(|&(v, _)| v != self.cur[x])
                .min_by_key(|&(v, &s)| (s, v));
            if let Some((v, &s)) = best {
                ranked.push((s, self.last_changed[x], x, v));
            }
        }
        ranked.sort_unstable();
        let first = *ranked.first()?;
        let newest = ranked.iter().map(|r| r.1).max().unwrap_or(0);
        let is_newest = newest > 0 && first.1 == newest;
        let Some(&second) = ranked.get(1).filter(|_| is_newest) else {
            return Some((first.2, first.3));
        };
        let gap = second.0 - first.0;
        let take_second = if noise < 0.5 {
            gap <= 1 && rng.gen_bool(2.0 * noise)
        } else {
            gap <= 1 || rng.gen_bool(2.0 * (noise - 0.5))
        };
        let chosen = if take_second { second } else { first };
        Some((chosen.2, chosen.3))
    }

    fn the_violated(&self) -> ConstraintId {
        self.cons
            .iter()
            .copied()
            .find(|&c| self.violated.contains(c))
            .expect("one violated constraint")
    }

    fn run<R: Rng>(
        &mut self,
        params: &LstcParams,
        rng: &mut R,
        deadline: Option<Instant>,
    ) -> LstcOutcome {
        let mut budget = i64::try_from(params.initial_iterations).unwrap_or(i64::MAX);
        let bonus = i64::try_from(params.bonus).unwrap_or(i64::MAX);
        let mut added = Vec::new();
        let mut trace = Vec::new();
        let mut local_minima = 0;
        let mut interrupted = false;
        while budget >= 0 {
            if self.iteration.is_multiple_of(1024) && deadline.is_some_and(|d| Instant::now() >= d)
            {
                interrupted = true;
                break;
            }
            self.iteration += 1;
            let best = self.best_score();
            let step = if best.is_none_or(|s| s >= 0) {
                local_minima += 1;
                if params.mining && self.n_violated == 1 {
                    let c = self.the_violated();
                    if self.muc.insert(c) {
                        added.push(c);
                        budget = budget.saturating_add(bonus);
                        self.refresh_offset();
                    } else {
                        budget = budget.saturating_sub(self.base[c] as i64);
                        self.base[c] += 1;
                        for i in 0..self.net.constraint(c).scope.len() {
                            let y = self.net.constraint(c).scope[i];
                            self.rescore(y);
                        }
                    }
                }
                let mv = match params.escape {
                    EscapeStrategy::RandomWalk => self.escape_random_walk(params.noise, rng),
                    EscapeStrategy::RNovelty => self.escape_rnovelty(params.noise, rng),
                };
                mv.map(|m| (m, MoveKind::Escape))
            } else {
                let moves = self.best_moves(0..self.cur.len());
                Self::pick(rng, &moves).map(|m| (m, MoveKind::Improve))
            };
            if let Some(((x, v), kind)) = step {
                self.apply(x, v);
                if params.record_trace {
                    trace.push(Some(Move {
                        var: x,
                        value: self.net.variable(x).domain[v],
                        kind,
                    }));
                }
            } else if params.record_trace {
                trace.push(None);
            }
            #[cfg(test)]
            assert!(self.scores_are_consistent());
            budget -= 1;
        }
        LstcOutcome {
            muc: self.muc.clone(),
            added,
            iterations: self.iteration,
            local_minima,
            trace,
            interrupted,
        }
    }

    /// Compares the incremental state with a naive recomputation.
    #[cfg(test)]
    fn scores_are_consistent(&self) -> bool {
        // the check is quadratic; only run it on small networks
        if self.cons.len() > 64 || self.cur.len() > 16 {
            return true;
        }
        let a = Assignment::from_indices(self.net, &self.cur);
        let mut weights = SearchWeights::with_priority(self.net, &self.muc);
        for &c in &self.cons {
            weights.set_base(c, self.base[c]);
        }
        let here = objective(self.net, &self.constraints, &weights, &a).expect("valid assignment");
        for x in 0..self.cur.len() {
            for (v, &s) in self.score[x].iter().enumerate() {
                if v == self.cur[x] {
                    continue;
                }
                let moved = a.with(x, self.net.variable(x).domain[v]);
                let there =
                    objective(self.net, &self.constraints, &weights, &moved).expect("valid");
                if there as i64 - here as i64 != s {
                    return false;
                }
            }
        }
        true
    }
}
