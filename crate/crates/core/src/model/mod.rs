//! Finite-domain constraint networks.

pub mod expr;
mod set;

use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;

pub use expr::{BinaryOp, Expr, Type, UnaryOp};
pub use set::ConstraintSet;

pub type VarId = usize;
pub type ConstraintId = usize;

/// Constraints whose full relation has at most this many tuples are
/// compiled to a bitset when the network is built.
const MAX_COMPILED_TUPLES: usize = 1 << 16;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("variable `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("variable `{var}` lists value {value} more than once")]
    DuplicateValue { var: String, value: i64 },
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("constraint `{constraint}` refers to unknown variable `{var}`")]
    UnknownVariable { constraint: String, var: String },
    #[error("constraint `{constraint}`: {source}")]
    Syntax {
        constraint: String,
        source: expr::SyntaxError,
    },
    #[error("constraint `{0}` has an empty scope")]
    EmptyScope(String),
    #[error("constraint `{constraint}` lists variable `{var}` twice in its scope")]
    DuplicateScopeVariable { constraint: String, var: String },
    #[error("constraint `{constraint}`: expression uses `{var}` which is not in its scope")]
    OutOfScope { constraint: String, var: String },
    #[error("constraint `{constraint}`: tuple of arity {found}, scope has arity {expected}")]
    ArityMismatch {
        constraint: String,
        expected: usize,
        found: usize,
    },
    #[error("constraint `{constraint}`: tuple value {value} is not in the domain of `{var}`")]
    TupleValueOutOfDomain {
        constraint: String,
        var: String,
        value: i64,
    },
    #[error("constraint `{constraint}`: {source}")]
    Type {
        constraint: String,
        source: expr::TypeError,
    },
    #[error("constraint `{constraint}` must be boolean, found an integer expression")]
    NotBoolean { constraint: String },
    #[error("constraint `{0}`: arithmetic may overflow 64-bit integers")]
    Overflow(String),
    #[error("assignment does not bind variable `{0}`")]
    UnboundVariable(String),
    #[error("value {value} is not in the domain of `{var}`")]
    ValueNotInDomain { var: String, value: i64 },
    #[error("unknown constraint `{0}`")]
    UnknownConstraint(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    /// Strictly increasing.
    pub domain: Vec<i64>,
}

impl Variable {
    pub fn min(&self) -> i64 {
        self.domain[0]
    }

    pub fn max(&self) -> i64 {
        *self.domain.last().expect("non-empty domain")
    }

    /// Position of `value` in the domain.
    pub fn index_of(&self, value: i64) -> Option<usize> {
        self.domain.binary_search(&value).ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Supports,
    Conflicts,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub polarity: Polarity,
    pub tuples: BTreeSet<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Body {
    Expr(Expr),
    Table(Table),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub id: ConstraintId,
    pub name: String,
    pub scope: Vec<VarId>,
    pub body: Body,
}

impl Constraint {
    /// Checks the constraint against a lookup of variable values. This is
    /// the reference semantics; it never uses the compiled relation.
    pub fn holds(&self, value_of: &impl Fn(VarId) -> i64) -> bool {
        match &self.body {
            Body::Expr(e) => e.eval(value_of) != 0,
            Body::Table(t) => {
                let tuple: Vec<i64> = self.scope.iter().map(|&v| value_of(v)).collect();
                t.tuples.contains(&tuple) == (t.polarity == Polarity::Supports)
            }
        }
    }
}

/// Allowed tuples of a constraint, indexed by mixed-radix domain positions.
#[derive(Clone, Debug)]
struct Relation {
    strides: Vec<usize>,
    allowed: FixedBitSet,
}

/// An immutable constraint network.
#[derive(Clone, Debug)]
pub struct ConstraintNetwork {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    var_constraints: Vec<Vec<ConstraintId>>,
    relations: Vec<Option<Relation>>,
    /// Ids of the constraints in the network this one was restricted from.
    origin: Vec<ConstraintId>,
}

impl PartialEq for ConstraintNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables && self.constraints == other.constraints
    }
}

impl ConstraintNetwork {
    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id]
    }

    pub fn constraint(&self, id: ConstraintId) -> &Constraint {
        &self.constraints[id]
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Constraints whose scope contains `var`, ascending.
    pub fn constraints_on(&self, var: VarId) -> &[ConstraintId] {
        &self.var_constraints[var]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn constraint_id(&self, name: &str) -> Option<ConstraintId> {
        self.constraints.iter().position(|c| c.name == name)
    }

    /// Id of constraint `id` in the network this one was restricted from.
    pub fn original_id(&self, id: ConstraintId) -> ConstraintId {
        self.origin[id]
    }

    pub fn all_constraints(&self) -> ConstraintSet {
        ConstraintSet::full(self.num_constraints())
    }

    pub fn no_constraints(&self) -> ConstraintSet {
        ConstraintSet::empty(self.num_constraints())
    }

    /// Resolves a list of constraint names to a set.
    pub fn constraint_set<S: AsRef<str>>(&self, names: &[S]) -> Result<ConstraintSet, ModelError> {
        let mut set = self.no_constraints();
        for n in names {
            let id = self
                .constraint_id(n.as_ref())
                .ok_or_else(|| ModelError::UnknownConstraint(n.as_ref().to_string()))?;
            set.insert(id);
        }
        Ok(set)
    }

    pub fn names(&self, set: &ConstraintSet) -> Vec<&str> {
        set.iter()
            .map(|c| self.constraints[c].name.as_str())
            .collect()
    }

    /// Product of the domain sizes, saturating.
    pub fn search_space(&self) -> u128 {
        self.variables
            .iter()
            .fold(1u128, |acc, v| acc.saturating_mul(v.domain.len() as u128))
    }

    /// Whether constraint `c` allows the tuple given by domain positions.
    #[inline]
    pub(crate) fn allows(&self, c: ConstraintId, index_of: impl Fn(VarId) -> usize) -> bool {
        let con = &self.constraints[c];
        match &self.relations[c] {
            Some(rel) => {
                let offset: usize = con
                    .scope
                    .iter()
                    .zip(&rel.strides)
                    .map(|(&v, s)| index_of(v) * s)
                    .sum();
                rel.allowed.contains(offset)
            }
            None => con.holds(&|v| self.variables[v].domain[index_of(v)]),
        }
    }

    /// Same as [`ConstraintNetwork::allows`] with the tuple given by scope
    /// position.
    #[inline]
    pub(crate) fn allows_tuple(&self, c: ConstraintId, tuple: &[usize]) -> bool {
        let con = &self.constraints[c];
        match &self.relations[c] {
            Some(rel) => {
                let offset: usize = tuple.iter().zip(&rel.strides).map(|(i, s)| i * s).sum();
                rel.allowed.contains(offset)
            }
            None => con.holds(&|v| {
                let pos = con
                    .scope
                    .iter()
                    .position(|&w| w == v)
                    .expect("scope variable");
                self.variables[v].domain[tuple[pos]]
            }),
        }
    }

    /// Truth value of `c` under `a`; errors when the assignment does not
    /// cover the scope.
    pub fn evaluate(&self, c: ConstraintId, a: &Assignment) -> Result<bool, ModelError> {
        let con = &self.constraints[c];
        for &v in &con.scope {
            let value = *a
                .values
                .get(v)
                .ok_or_else(|| ModelError::UnboundVariable(self.variables[v].name.clone()))?;
            if self.variables[v].index_of(value).is_none() {
                return Err(ModelError::ValueNotInDomain {
                    var: self.variables[v].name.clone(),
                    value,
                });
            }
        }
        Ok(con.holds(&|v| a.values[v]))
    }

    fn check_total(&self, a: &Assignment) -> Result<(), ModelError> {
        if a.values.len() < self.variables.len() {
            return Err(ModelError::UnboundVariable(
                self.variables[a.values.len()].name.clone(),
            ));
        }
        Ok(())
    }

    /// Constraints of the network falsified by `a`.
    pub fn violated_set(&self, a: &Assignment) -> Result<ConstraintSet, ModelError> {
        self.violated_within(&self.all_constraints(), a)
    }

    /// Constraints of `within` falsified by `a`.
    pub fn violated_within(
        &self,
        within: &ConstraintSet,
        a: &Assignment,
    ) -> Result<ConstraintSet, ModelError> {
        self.check_total(a)?;
        let mut out = self.no_constraints();
        for c in within.iter() {
            if !self.evaluate(c, a)? {
                out.insert(c);
            }
        }
        Ok(out)
    }

    /// The single falsified constraint if `a` is a transition assignment.
    pub fn transition_check(&self, a: &Assignment) -> Result<Option<ConstraintId>, ModelError> {
        self.transition_within(&self.all_constraints(), a)
    }

    pub fn transition_within(
        &self,
        within: &ConstraintSet,
        a: &Assignment,
    ) -> Result<Option<ConstraintId>, ModelError> {
        let violated = self.violated_within(within, a)?;
        Ok(if violated.len() == 1 {
            violated.iter().next()
        } else {
            None
        })
    }

    /// Network over the same variables keeping only `keep`. Constraint ids
    /// are renumbered densely; [`ConstraintNetwork::original_id`] maps back.
    pub fn restrict(&self, keep: &ConstraintSet) -> ConstraintNetwork {
        let mut constraints = Vec::with_capacity(keep.len());
        let mut relations = Vec::with_capacity(keep.len());
        let mut origin = Vec::with_capacity(keep.len());
        for (new_id, old) in keep.iter().enumerate() {
            let mut c = self.constraints[old].clone();
            c.id = new_id;
            constraints.push(c);
            relations.push(self.relations[old].clone());
            origin.push(self.origin[old]);
        }
        let var_constraints = incidence(self.variables.len(), &constraints);
        ConstraintNetwork {
            variables: self.variables.clone(),
            constraints,
            var_constraints,
            relations,
            origin,
        }
    }

    /// Same variables, no constraints.
    pub fn without_constraints(&self) -> ConstraintNetwork {
        self.restrict(&self.no_constraints())
    }
}

fn incidence(n_vars: usize, constraints: &[Constraint]) -> Vec<Vec<ConstraintId>> {
    let mut out = vec![Vec::new(); n_vars];
    for c in constraints {
        for &v in &c.scope {
            out[v].push(c.id);
        }
    }
    out
}

fn compile(variables: &[Variable], c: &Constraint) -> Option<Relation> {
    let mut strides = vec![0; c.scope.len()];
    let mut total = 1usize;
    for (i, &v) in c.scope.iter().enumerate().rev() {
        strides[i] = total;
        total = total.checked_mul(variables[v].domain.len())?;
        if total > MAX_COMPILED_TUPLES {
            return None;
        }
    }
    let mut allowed = FixedBitSet::with_capacity(total);
    let mut idx = vec![0usize; c.scope.len()];
    for offset in 0..total {
        let mut rem = offset;
        for (i, s) in strides.iter().enumerate() {
            idx[i] = rem / s;
            rem %= s;
        }
        let ok = c.holds(&|v| {
            let pos = c
                .scope
                .iter()
                .position(|&w| w == v)
                .expect("scope variable");
            variables[v].domain[idx[pos]]
        });
        allowed.set(offset, ok);
    }
    Some(Relation { strides, allowed })
}

/// Incremental construction of a [`ConstraintNetwork`] with validation.
#[derive(Default)]
pub struct NetworkBuilder {
    variables: Vec<Variable>,
    var_index: HashMap<String, VarId>,
    constraints: Vec<Constraint>,
    constraint_names: HashMap<String, ConstraintId>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable; the domain is sorted, duplicates are rejected.
    pub fn variable(
        &mut self,
        name: impl Into<String>,
        domain: impl IntoIterator<Item = i64>,
    ) -> Result<VarId, ModelError> {
        let name = name.into();
        let mut domain: Vec<i64> = domain.into_iter().collect();
        if domain.is_empty() {
            return Err(ModelError::EmptyDomain(name));
        }
        domain.sort_unstable();
        if let Some(w) = domain.windows(2).find(|w| w[0] == w[1]) {
            return Err(ModelError::DuplicateValue {
                var: name,
                value: w[0],
            });
        }
        if self.var_index.contains_key(&name) {
            return Err(ModelError::DuplicateName(name));
        }
        let id = self.variables.len();
        self.var_index.insert(name.clone(), id);
        self.variables.push(Variable { name, domain });
        Ok(id)
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.var_index.get(name).copied()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    fn resolve_scope<S: AsRef<str>>(
        &self,
        name: &str,
        scope: &[S],
    ) -> Result<Vec<VarId>, ModelError> {
        scope
            .iter()
            .map(|s| {
                self.var_id(s.as_ref())
                    .ok_or_else(|| ModelError::UnknownVariable {
                        constraint: name.to_string(),
                        var: s.as_ref().to_string(),
                    })
            })
            .collect()
    }

    /// Intensional constraint from expression text over named scope.
    pub fn expr_constraint<S: AsRef<str>>(
        &mut self,
        name: impl Into<String>,
        scope: &[S],
        text: &str,
    ) -> Result<ConstraintId, ModelError> {
        let name = name.into();
        let scope_ids = self.resolve_scope(&name, scope)?;
        let expr = expr::parse(text, &|s| self.var_id(s)).map_err(|source| ModelError::Syntax {
            constraint: name.clone(),
            source,
        })?;
        self.expr(name, scope_ids, expr)
    }

    pub fn expr(
        &mut self,
        name: impl Into<String>,
        scope: Vec<VarId>,
        expr: Expr,
    ) -> Result<ConstraintId, ModelError> {
        let name = name.into();
        self.check_scope(&name, &scope)?;
        let mut missing = None;
        expr.for_each_var(&mut |v| {
            if missing.is_none() && !scope.contains(&v) {
                missing = Some(v);
            }
        });
        if let Some(v) = missing {
            return Err(ModelError::OutOfScope {
                constraint: name,
                var: self
                    .variables
                    .get(v)
                    .map_or_else(|| format!("#{v}"), |x| x.name.clone()),
            });
        }
        match expr.type_of() {
            Err(source) => {
                return Err(ModelError::Type {
                    constraint: name,
                    source,
                })
            }
            Ok(Type::Int) => return Err(ModelError::NotBoolean { constraint: name }),
            Ok(Type::Bool) => {}
        }
        let vars = &self.variables;
        if expr.bounds(&|v| (vars[v].min(), vars[v].max())).is_none() {
            return Err(ModelError::Overflow(name));
        }
        self.push(name, scope, Body::Expr(expr))
    }

    pub fn table<S: AsRef<str>>(
        &mut self,
        name: impl Into<String>,
        scope: &[S],
        polarity: Polarity,
        tuples: impl IntoIterator<Item = Vec<i64>>,
    ) -> Result<ConstraintId, ModelError> {
        let name = name.into();
        let scope_ids = self.resolve_scope(&name, scope)?;
        self.table_ids(name, scope_ids, polarity, tuples)
    }

    pub fn table_ids(
        &mut self,
        name: impl Into<String>,
        scope: Vec<VarId>,
        polarity: Polarity,
        tuples: impl IntoIterator<Item = Vec<i64>>,
    ) -> Result<ConstraintId, ModelError> {
        let name = name.into();
        self.check_scope(&name, &scope)?;
        let mut set = BTreeSet::new();
        for t in tuples {
            if t.len() != scope.len() {
                return Err(ModelError::ArityMismatch {
                    constraint: name,
                    expected: scope.len(),
                    found: t.len(),
                });
            }
            for (&v, &value) in scope.iter().zip(&t) {
                if self.variables[v].index_of(value).is_none() {
                    return Err(ModelError::TupleValueOutOfDomain {
                        constraint: name,
                        var: self.variables[v].name.clone(),
                        value,
                    });
                }
            }
            set.insert(t);
        }
        self.push(
            name,
            scope,
            Body::Table(Table {
                polarity,
                tuples: set,
            }),
        )
    }

    fn check_scope(&self, name: &str, scope: &[VarId]) -> Result<(), ModelError> {
        if scope.is_empty() {
            return Err(ModelError::EmptyScope(name.to_string()));
        }
        for (i, &v) in scope.iter().enumerate() {
            if v >= self.variables.len() {
                return Err(ModelError::UnknownVariable {
                    constraint: name.to_string(),
                    var: format!("#{v}"),
                });
            }
            if scope[..i].contains(&v) {
                return Err(ModelError::DuplicateScopeVariable {
                    constraint: name.to_string(),
                    var: self.variables[v].name.clone(),
                });
            }
        }
        Ok(())
    }

    fn push(
        &mut self,
        name: String,
        scope: Vec<VarId>,
        body: Body,
    ) -> Result<ConstraintId, ModelError> {
        if self.constraint_names.contains_key(&name) {
            return Err(ModelError::DuplicateName(name));
        }
        let id = self.constraints.len();
        self.constraint_names.insert(name.clone(), id);
        self.constraints.push(Constraint {
            id,
            name,
            scope,
            body,
        });
        Ok(id)
    }

    pub fn build(self) -> ConstraintNetwork {
        let relations = self
            .constraints
            .iter()
            .map(|c| compile(&self.variables, c))
            .collect();
        let var_constraints = incidence(self.variables.len(), &self.constraints);
        let origin = (0..self.constraints.len()).collect();
        ConstraintNetwork {
            variables: self.variables,
            constraints: self.constraints,
            var_constraints,
            relations,
            origin,
        }
    }
}

/// A total assignment of domain values to the variables of a network.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<i64>,
}

impl Assignment {
    /// Validates totality and domain membership against `net`.
    pub fn new(net: &ConstraintNetwork, values: Vec<i64>) -> Result<Self, ModelError> {
        if values.len() < net.num_variables() {
            return Err(ModelError::UnboundVariable(
                net.variable(values.len()).name.clone(),
            ));
        }
        for (var, &value) in net.variables().iter().zip(&values) {
            if var.index_of(value).is_none() {
                return Err(ModelError::ValueNotInDomain {
                    var: var.name.clone(),
                    value,
                });
            }
        }
        Ok(Self { values })
    }

    /// Builds from `(name, value)` pairs; every variable must be named.
    pub fn from_pairs(net: &ConstraintNetwork, pairs: &[(&str, i64)]) -> Result<Self, ModelError> {
        let mut values = vec![None; net.num_variables()];
        for &(name, value) in pairs {
            let id = net
                .var_id(name)
                .ok_or_else(|| ModelError::UnboundVariable(name.to_string()))?;
            values[id] = Some(value);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| ModelError::UnboundVariable(net.variable(i).name.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(net, values)
    }

    pub(crate) fn from_indices(net: &ConstraintNetwork, idx: &[usize]) -> Self {
        Self {
            values: idx
                .iter()
                .enumerate()
                .map(|(v, &i)| net.variable(v).domain[i])
                .collect(),
        }
    }

    pub(crate) fn to_indices(&self, net: &ConstraintNetwork) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .map(|(v, &x)| net.variable(v).index_of(x).expect("validated assignment"))
            .collect()
    }

    pub fn get(&self, var: VarId) -> i64 {
        self.values[var]
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// Copy with `var` set to `value`.
    pub fn with(&self, var: VarId, value: i64) -> Self {
        let mut values = self.values.clone();
        values[var] = value;
        Self { values }
    }

    pub fn display<'a>(&'a self, net: &'a ConstraintNetwork) -> String {
        net.variables()
            .iter()
            .zip(&self.values)
            .map(|(v, x)| format!("{}={}", v.name, x))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn witness_assignment(net: &ConstraintNetwork) -> Assignment {
        Assignment::from_pairs(net, &[("i", 2), ("j", 0), ("k", 1), ("l", 2), ("m", 4)]).unwrap()
    }

    #[test]
    fn evaluate_ordering() {
        let net = fixtures::ordering();
        let a = witness_assignment(&net);
        let c4 = net.constraint_id("c4").unwrap();
        let c1 = net.constraint_id("c1").unwrap();
        assert!(!net.evaluate(c4, &a).unwrap());
        assert!(net.evaluate(c1, &a).unwrap());
    }

    #[test]
    fn reflexive_equality_always_holds() {
        let mut b = NetworkBuilder::new();
        b.variable("x", 0..5).unwrap();
        b.expr_constraint("self", &["x"], "eq(x,x)").unwrap();
        let net = b.build();
        for x in 0..5 {
            let a = Assignment::new(&net, vec![x]).unwrap();
            assert!(net.evaluate(0, &a).unwrap());
        }
    }

    #[test]
    fn violated_and_transition_ordering() {
        let net = fixtures::ordering();
        let a = witness_assignment(&net);
        let c4 = net.constraint_id("c4").unwrap();
        assert_eq!(net.violated_set(&a).unwrap().to_vec(), vec![c4]);
        assert_eq!(net.transition_check(&a).unwrap(), Some(c4));
        // j=3 fixes c4 but breaks c3 (3<=2) and c6 (3<1)
        let a2 = a.with(net.var_id("j").unwrap(), 3);
        assert_eq!(net.violated_set(&a2).unwrap().len(), 2);
        assert_eq!(net.transition_check(&a2).unwrap(), None);
    }

    #[test]
    fn violated_diamond() {
        let net = fixtures::diamond();
        let a =
            Assignment::from_pairs(&net, &[("x1", 1), ("x2", 2), ("x3", 2), ("x4", 1)]).unwrap();
        assert_eq!(net.names(&net.violated_set(&a).unwrap()), vec!["c3"]);
    }

    #[test]
    fn solution_has_no_violations() {
        let net = fixtures::ordering();
        let c4 = net.constraint_id("c4").unwrap();
        let sub = net.restrict(
            &net.all_constraints()
                .difference(&ConstraintSet::from_ids(7, [c4])),
        );
        let a = witness_assignment(&sub);
        assert!(sub.violated_set(&a).unwrap().is_empty());
        assert_eq!(sub.transition_check(&a).unwrap(), None);
    }

    #[test]
    fn unbound_variable_is_an_error() {
        let net = fixtures::ordering();
        let short = Assignment { values: vec![0, 0] };
        assert!(matches!(
            net.evaluate(0, &short),
            Err(ModelError::UnboundVariable(_))
        ));
        assert!(net.violated_set(&short).is_err());
        assert!(Assignment::new(&net, vec![0; 4]).is_err());
        assert!(Assignment::new(&net, vec![9; 5]).is_err());
    }

    #[test]
    fn restrict_preserves_origin() {
        let net = fixtures::ordering();
        let same = net.restrict(&net.all_constraints());
        assert_eq!(same, net);
        let keep = net.constraint_set(&["c4", "c5", "c6"]).unwrap();
        let sub = net.restrict(&keep);
        let triangle = fixtures::lt_triangle();
        assert_eq!(sub.num_constraints(), triangle.num_constraints());
        for (a, b) in sub.constraints().iter().zip(triangle.constraints()) {
            assert_eq!(a.name, b.name);
            let scope_names = |n: &ConstraintNetwork, c: &Constraint| -> Vec<String> {
                c.scope
                    .iter()
                    .map(|&v| n.variable(v).name.clone())
                    .collect()
            };
            assert_eq!(scope_names(&sub, a), scope_names(&triangle, b));
        }
        // l and m are left unconstrained
        assert!(sub.constraints_on(3).is_empty() && sub.constraints_on(4).is_empty());
        assert_eq!(
            (0..3).map(|c| sub.original_id(c)).collect::<Vec<_>>(),
            keep.to_vec()
        );
        let nested = sub.restrict(&ConstraintSet::from_ids(3, [2]));
        assert_eq!(nested.original_id(0), net.constraint_id("c6").unwrap());
        let empty = net.without_constraints();
        assert_eq!(empty.num_constraints(), 0);
        assert_eq!(empty.num_variables(), 5);
    }

    #[test]
    fn builder_rejections() {
        let mut b = NetworkBuilder::new();
        assert!(matches!(
            b.variable("x", []),
            Err(ModelError::EmptyDomain(_))
        ));
        b.variable("x", [3, 1, 2]).unwrap();
        assert_eq!(b.variables[0].domain, vec![1, 2, 3]);
        assert!(matches!(
            b.variable("x", [1]),
            Err(ModelError::DuplicateName(_))
        ));
        assert!(matches!(
            b.variable("y", [1, 1]),
            Err(ModelError::DuplicateValue { .. })
        ));
        b.variable("y", [0, 1]).unwrap();
        assert!(matches!(
            b.expr_constraint("c", &["x", "z"], "lt(x,z)"),
            Err(ModelError::UnknownVariable { .. })
        ));
        assert!(matches!(
            b.expr_constraint("c", &["x"], "lt(x,y)"),
            Err(ModelError::OutOfScope { .. })
        ));
        assert!(matches!(
            b.expr_constraint("c", &["x", "x"], "lt(x,1)"),
            Err(ModelError::DuplicateScopeVariable { .. })
        ));
        assert!(matches!(
            b.expr_constraint("c", &["x"], "add(x,1)"),
            Err(ModelError::NotBoolean { .. })
        ));
        assert!(matches!(
            b.table("t", &["x", "y"], Polarity::Supports, [vec![1]]),
            Err(ModelError::ArityMismatch { .. })
        ));
        assert!(matches!(
            b.table("t", &["x", "y"], Polarity::Supports, [vec![1, 7]]),
            Err(ModelError::TupleValueOutOfDomain { .. })
        ));
        let empty: &[&str] = &[];
        assert!(matches!(
            b.table("t", empty, Polarity::Supports, []),
            Err(ModelError::EmptyScope(_))
        ));
        b.expr_constraint("c", &["x", "y"], "lt(y,x)").unwrap();
        assert!(matches!(
            b.expr_constraint("c", &["x"], "lt(x,2)"),
            Err(ModelError::DuplicateName(_))
        ));
    }

    #[test]
    fn overflow_is_structural() {
        let mut b = NetworkBuilder::new();
        b.variable("x", [0, i64::MAX]).unwrap();
        assert!(matches!(
            b.expr_constraint("c", &["x"], "eq(add(x,1),0)"),
            Err(ModelError::Overflow(_))
        ));
    }

    #[test]
    fn compiled_relation_matches_reference() {
        let mut b = NetworkBuilder::new();
        b.variable("x", -2..3).unwrap();
        b.variable("y", 0..4).unwrap();
        b.variable("z", [1, 5, 9]).unwrap();
        b.expr_constraint("c", &["z", "x", "y"], "or(eq(add(x,y),z),gt(abs(x),y))")
            .unwrap();
        b.table(
            "t",
            &["y", "x"],
            Polarity::Conflicts,
            [vec![0, 0], vec![3, -2]],
        )
        .unwrap();
        let net = b.build();
        for xi in 0..5 {
            for yi in 0..4 {
                for zi in 0..3 {
                    let idx = [xi, yi, zi];
                    let a = Assignment::from_indices(&net, &idx);
                    for c in 0..2 {
                        assert_eq!(net.allows(c, |v| idx[v]), net.evaluate(c, &a).unwrap());
                    }
                }
            }
        }
    }
}
