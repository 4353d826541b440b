use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ConstraintNetwork, NetworkBuilder};

/// Unsatisfiable sub-network planted by [`generate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gadget {
    /// Chosen at random among those that fit.
    Any,
    /// `x1 < x2 < ... < xk < x1` over `k` random variables.
    LessCycle,
    /// Pairwise disequality over `d+1` variables with `d` values.
    Clique,
}

#[derive(Clone, Debug)]
pub struct GenParams {
    pub seed: u64,
    pub vars: usize,
    pub domain: usize,
    /// Probability that a pair of variables gets a random constraint.
    pub density: f64,
    pub ensure_unsat: bool,
    pub gadget: Gadget,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            seed: 0,
            vars: 6,
            domain: 3,
            density: 0.3,
            ensure_unsat: true,
            gadget: Gadget::Any,
        }
    }
}

const COMPARISONS: [&str; 6] = ["lt", "le", "gt", "ge", "eq", "ne"];

/// Random binary network over `x1..xn` with values `0..d`. Constraints
/// are shuffled and named `c1..cm`.
///
/// # Panics
///
/// When `vars` or `domain` is zero, when `density` is outside `[0,1]`, or
/// when an unsatisfiable network is requested with fewer than two
/// variables.
pub fn generate(params: &GenParams) -> ConstraintNetwork {
    assert!(
        params.vars > 0 && params.domain > 0,
        "sizes must be positive"
    );
    assert!(
        (0.0..=1.0).contains(&params.density),
        "density must lie in [0,1]"
    );
    assert!(
        !params.ensure_unsat || params.vars >= 2,
        "an unsatisfiable network needs two variables"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.vars;
    let d = params.domain as i64;
    let name = |i: usize| format!("x{}", i + 1);
    // (scope, expression)
    let mut items: Vec<([usize; 2], String)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if !rng.gen_bool(params.density) {
                continue;
            }
            let (a, b) = if rng.gen_bool(0.5) { (i, j) } else { (j, i) };
            let op = COMPARISONS[rng.gen_range(0..COMPARISONS.len())];
            let shift = rng.gen_range(-1..=1i64);
            let rhs = match shift {
                0 => name(b),
                s if s > 0 => format!("add({},{s})", name(b)),
                s => format!("sub({},{})", name(b), -s),
            };
            items.push(([a, b], format!("{op}({},{rhs})", name(a))));
        }
    }
    if params.ensure_unsat {
        let clique_fits = params.domain < n;
        let clique = match params.gadget {
            Gadget::Clique => {
                assert!(
                    clique_fits,
                    "a clique gadget needs more variables than values"
                );
                true
            }
            Gadget::LessCycle => false,
            Gadget::Any => clique_fits && rng.gen_bool(0.5),
        };
        let mut pool: Vec<usize> = (0..n).collect();
        pool.shuffle(&mut rng);
        if clique {
            let members = &pool[..params.domain + 1];
            for (p, &a) in members.iter().enumerate() {
                for &b in &members[p + 1..] {
                    items.push(([a, b], format!("ne({},{})", name(a), name(b))));
                }
            }
        } else {
            let k = rng.gen_range(2..=n.min(4));
            let members = &pool[..k];
            for p in 0..k {
                let (a, b) = (members[p], members[(p + 1) % k]);
                items.push(([a, b], format!("lt({},{})", name(a), name(b))));
            }
        }
    }
    items.shuffle(&mut rng);
    let mut builder = NetworkBuilder::new();
    for i in 0..n {
        builder.variable(name(i), 0..d).expect("fresh name");
    }
    for (k, (scope, text)) in items.iter().enumerate() {
        builder
            .expr_constraint(
                format!("c{}", k + 1),
                &[name(scope[0]), name(scope[1])],
                text,
            )
            .expect("generated constraint is well formed");
    }
    builder.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{all_mucs, brute_sat, DEFAULT_BOUND};

    #[test]
    fn same_seed_same_network() {
        let p = GenParams {
            seed: 42,
            ..Default::default()
        };
        assert_eq!(generate(&p), generate(&p));
        let q = GenParams { seed: 43, ..p };
        assert_ne!(
            generate(&q),
            generate(&GenParams {
                seed: 42,
                ..q.clone()
            })
        );
    }

    #[test]
    fn planted_gadgets_are_unsat() {
        for seed in 0..40 {
            for gadget in [Gadget::LessCycle, Gadget::Clique, Gadget::Any] {
                let net = generate(&GenParams {
                    seed,
                    vars: 5,
                    domain: 3,
                    density: 0.2,
                    ensure_unsat: true,
                    gadget,
                });
                assert!(brute_sat(&net, &net.all_constraints(), DEFAULT_BOUND)
                    .unwrap()
                    .is_none());
            }
        }
    }

    #[test]
    fn lone_cycle_is_the_only_muc() {
        let net = generate(&GenParams {
            seed: 7,
            vars: 3,
            domain: 4,
            density: 0.0,
            ensure_unsat: true,
            gadget: Gadget::LessCycle,
        });
        assert!((2..=3).contains(&net.num_constraints()));
        assert_eq!(
            all_mucs(&net, &net.all_constraints()).unwrap(),
            vec![net.all_constraints()]
        );
    }

    #[test]
    fn lone_clique_is_the_only_muc() {
        let net = generate(&GenParams {
            seed: 1,
            vars: 4,
            domain: 3,
            density: 0.0,
            ensure_unsat: true,
            gadget: Gadget::Clique,
        });
        assert_eq!(net.num_constraints(), 6);
        assert_eq!(
            all_mucs(&net, &net.all_constraints()).unwrap(),
            vec![net.all_constraints()]
        );
    }
}
