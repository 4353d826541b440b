//! Small reference networks used by tests, examples and the CLI.

use crate::model::{ConstraintNetwork, NetworkBuilder};

/// Five variables `i,j,k,l,m` over `0..=4` with seven binary constraints;
/// unsatisfiable with the single minimal core `{c4,c5,c6}`.
pub fn ordering() -> ConstraintNetwork {
    let mut b = NetworkBuilder::new();
    for name in ["i", "j", "k", "l", "m"] {
        b.variable(name, 0..=4).expect("fresh name");
    }
    let constraints: [(&str, [&str; 2], &str); 7] = [
        ("c1", ["m", "i"], "gt(m,i)"),
        ("c2", ["m", "l"], "eq(m,add(l,2))"),
        ("c3", ["j", "l"], "le(j,l)"),
        ("c4", ["i", "j"], "lt(i,j)"),
        ("c5", ["k", "i"], "lt(k,i)"),
        ("c6", ["j", "k"], "lt(j,k)"),
        ("c7", ["k", "l"], "ne(k,l)"),
    ];
    for (name, scope, text) in constraints {
        b.expr_constraint(name, &scope, text)
            .expect("valid fixture");
    }
    b.build()
}

/// The strict-inequality triangle `i<j`, `k<i`, `j<k` over `0..=4`.
pub fn lt_triangle() -> ConstraintNetwork {
    let mut b = NetworkBuilder::new();
    for name in ["i", "j", "k"] {
        b.variable(name, 0..=4).expect("fresh name");
    }
    b.expr_constraint("c4", &["i", "j"], "lt(i,j)")
        .expect("valid fixture");
    b.expr_constraint("c5", &["k", "i"], "lt(k,i)")
        .expect("valid fixture");
    b.expr_constraint("c6", &["j", "k"], "lt(j,k)")
        .expect("valid fixture");
    b.build()
}

/// Four variables over `{1,2}` and five disequalities forming two
/// triangles that share `c3`.
pub fn diamond() -> ConstraintNetwork {
    let mut b = NetworkBuilder::new();
    for name in ["x1", "x2", "x3", "x4"] {
        b.variable(name, 1..=2).expect("fresh name");
    }
    let edges = [
        ("c1", "x1", "x2"),
        ("c2", "x1", "x3"),
        ("c3", "x2", "x3"),
        ("c4", "x2", "x4"),
        ("c5", "x3", "x4"),
    ];
    for (name, a, c) in edges {
        b.expr_constraint(name, &[a, c], &format!("ne({a},{c})"))
            .expect("valid fixture");
    }
    b.build()
}

/// Complete graph of disequalities over `n` variables with domains
/// `0..colors`. Unsatisfiable when `n > colors`; its minimal cores are the
/// `(colors+1)`-cliques.
pub fn not_equal_clique(n: usize, colors: usize) -> ConstraintNetwork {
    let mut b = NetworkBuilder::new();
    for i in 1..=n {
        b.variable(format!("x{i}"), 0..colors as i64)
            .expect("fresh name");
    }
    let mut k = 0;
    for i in 1..=n {
        for j in i + 1..=n {
            k += 1;
            let (a, c) = (format!("x{i}"), format!("x{j}"));
            b.expr_constraint(format!("c{k}"), &[&a, &c], &format!("ne({a},{c})"))
                .expect("valid fixture");
        }
    }
    b.build()
}
