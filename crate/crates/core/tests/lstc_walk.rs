//! With mining off the local search is a plain weighted walk; a naive
//! re-implementation that recomputes the objective for every candidate
//! move must produce the same moves from the same generator.

use muc_core::lstc::{lstc, objective, LstcParams, Move, MoveKind, SearchWeights};
use muc_core::oracle::{generate, Gadget, GenParams};
use muc_core::{fixtures, Assignment, ConstraintNetwork, ConstraintSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn naive_walk(
    net: &ConstraintNetwork,
    set: &ConstraintSet,
    priority: &ConstraintSet,
    iterations: u64,
    noise: f64,
    seed: u64,
) -> Vec<Option<Move>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = SearchWeights::with_priority(net, priority);
    let doms: Vec<&[i64]> = net
        .variables()
        .iter()
        .map(|v| v.domain.as_slice())
        .collect();
    let mut idx: Vec<usize> = doms.iter().map(|d| rng.gen_range(0..d.len())).collect();
    let value = |idx: &[usize]| {
        Assignment::new(net, idx.iter().zip(&doms).map(|(&i, d)| d[i]).collect()).unwrap()
    };
    let mut trace = Vec::new();
    for _ in 0..=iterations {
        let a = value(&idx);
        let here = objective(net, set, &weights, &a).unwrap() as i64;
        let delta = |x: usize, v: usize| {
            objective(net, set, &weights, &a.with(x, doms[x][v])).unwrap() as i64 - here
        };
        let best_over = |vars: &[usize]| {
            let mut best = i64::MAX;
            let mut out = Vec::new();
            for &x in vars {
                for v in 0..doms[x].len() {
                    if v == idx[x] {
                        continue;
                    }
                    let s = delta(x, v);
                    if s < best {
                        best = s;
                        out.clear();
                    }
                    if s == best {
                        out.push((x, v));
                    }
                }
            }
            (best, out)
        };
        let all: Vec<usize> = (0..doms.len()).collect();
        let (best, improving) = best_over(&all);
        let violated = net.violated_within(set, &a).unwrap().to_vec();
        let step = if improving.is_empty() || best >= 0 {
            if rng.gen_bool(noise) {
                let vars: Vec<usize> = if violated.is_empty() {
                    all.iter().copied().filter(|&x| doms[x].len() > 1).collect()
                } else {
                    let c = violated[rng.gen_range(0..violated.len())];
                    net.constraint(c)
                        .scope
                        .iter()
                        .copied()
                        .filter(|&x| doms[x].len() > 1)
                        .collect()
                };
                if vars.is_empty() {
                    None
                } else {
                    let x = vars[rng.gen_range(0..vars.len())];
                    let r = rng.gen_range(0..doms[x].len() - 1);
                    Some((x, if r >= idx[x] { r + 1 } else { r }, MoveKind::Escape))
                }
            } else {
                let mut vars: Vec<usize> = if violated.is_empty() {
                    all.clone()
                } else {
                    violated
                        .iter()
                        .flat_map(|&c| net.constraint(c).scope.clone())
                        .collect()
                };
                vars.sort_unstable();
                vars.dedup();
                let (_, moves) = best_over(&vars);
                (!moves.is_empty()).then(|| {
                    let (x, v) = moves[rng.gen_range(0..moves.len())];
                    (x, v, MoveKind::Escape)
                })
            }
        } else {
            let (x, v) = improving[rng.gen_range(0..improving.len())];
            Some((x, v, MoveKind::Improve))
        };
        trace.push(step.map(|(x, v, kind)| {
            idx[x] = v;
            Move {
                var: x,
                value: doms[x][v],
                kind,
            }
        }));
    }
    trace
}

fn compare(net: &ConstraintNetwork, priority: &ConstraintSet, seed: u64) {
    let params = LstcParams {
        initial_iterations: 400,
        seed,
        mining: false,
        record_trace: true,
        ..Default::default()
    };
    let set = net.all_constraints();
    let out = lstc(net, &set, priority, None, &params);
    let expected = naive_walk(net, &set, priority, 400, params.noise, seed);
    assert_eq!(out.trace.len(), expected.len());
    assert_eq!(out.trace, expected, "seed {seed}");
    assert!(out.added.is_empty());
    assert_eq!(&out.muc, priority);
}

#[test]
fn walk_matches_naive_recomputation() {
    let net = fixtures::ordering();
    for seed in 0..5 {
        compare(&net, &net.no_constraints(), seed);
    }
    let tri = fixtures::lt_triangle();
    compare(&tri, &tri.constraint_set(&["c4"]).unwrap(), 9);
}

#[test]
fn walk_matches_on_generated_networks() {
    for seed in 0..10 {
        let net = generate(&GenParams {
            seed,
            vars: 6,
            domain: 3,
            density: 0.5,
            ensure_unsat: seed % 2 == 0,
            gadget: Gadget::Any,
        });
        let priority = ConstraintSet::from_ids(net.num_constraints(), [0]);
        compare(&net, &net.no_constraints(), seed);
        compare(&net, &priority, seed + 100);
    }
}
