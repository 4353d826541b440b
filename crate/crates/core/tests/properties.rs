use muc_core::format::{parse_network, to_json};
use muc_core::model::Polarity;
use muc_core::oracle::{brute_sat, generate, Gadget, GenParams, DEFAULT_BOUND};
use muc_core::solver::{solve, SolverConfig};
use muc_core::{Assignment, ConstraintNetwork, NetworkBuilder};
use proptest::prelude::*;

fn gen_params() -> impl Strategy<Value = GenParams> {
    (
        any::<u64>(),
        2usize..7,
        1usize..5,
        0.0f64..1.0,
        any::<bool>(),
    )
        .prop_map(|(seed, vars, domain, density, ensure_unsat)| GenParams {
            seed,
            vars,
            domain,
            density,
            ensure_unsat,
            gadget: Gadget::Any,
        })
}

/// Same network with every constraint replaced by its table of allowed
/// or forbidden tuples.
fn tabulate(net: &ConstraintNetwork, polarity: Polarity) -> ConstraintNetwork {
    let mut b = NetworkBuilder::new();
    for v in net.variables() {
        b.variable(v.name.clone(), v.domain.clone()).unwrap();
    }
    let base: Vec<i64> = net.variables().iter().map(|v| v.min()).collect();
    for c in net.constraints() {
        let [x, y] = [c.scope[0], c.scope[1]];
        let mut tuples = Vec::new();
        for &vx in &net.variable(x).domain {
            for &vy in &net.variable(y).domain {
                let mut values = base.clone();
                values[x] = vx;
                values[y] = vy;
                let ok = c.holds(&|z| values[z]);
                if ok == (polarity == Polarity::Supports) {
                    tuples.push(vec![vx, vy]);
                }
            }
        }
        b.table_ids(c.name.clone(), c.scope.clone(), polarity, tuples)
            .unwrap();
    }
    b.build()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip(p in gen_params()) {
        let net = generate(&p);
        let text = to_json(&net);
        let back = parse_network(&text).unwrap();
        prop_assert_eq!(&back, &net);
        prop_assert_eq!(to_json(&back), text);
    }

    #[test]
    fn tables_and_expressions_agree(p in gen_params(), values in prop::collection::vec(0i64..4, 6)) {
        let net = generate(&p);
        let d = p.domain as i64;
        let a: Vec<i64> = values.iter().take(net.num_variables()).map(|v| v % d).collect();
        let a = Assignment::new(&net, a).unwrap();
        for polarity in [Polarity::Supports, Polarity::Conflicts] {
            let tab = tabulate(&net, polarity);
            let a2 = Assignment::new(&tab, a.values().to_vec()).unwrap();
            prop_assert_eq!(net.violated_set(&a).unwrap(), tab.violated_set(&a2).unwrap());
            let all = net.all_constraints();
            let s1 = solve(&net, &all, &SolverConfig::default());
            let s2 = solve(&tab, &all, &SolverConfig::default());
            prop_assert_eq!(s1.outcome.is_sat(), s2.outcome.is_sat());
            prop_assert_eq!(s1.active, s2.active);
        }
    }

    #[test]
    fn solver_matches_oracle(p in gen_params()) {
        let net = generate(&p);
        let all = net.all_constraints();
        let truth = brute_sat(&net, &all, DEFAULT_BOUND).unwrap();
        prop_assert_eq!(solve(&net, &all, &SolverConfig::default()).outcome.is_sat(), truth.is_some());
        if p.ensure_unsat {
            prop_assert!(truth.is_none());
        }
    }
}
