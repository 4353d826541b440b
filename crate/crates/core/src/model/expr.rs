//! Intensional constraint expressions.
//!
//! The textual form is a prefix functional syntax, e.g. `eq(m,add(l,2))`.
//! Booleans and integers share one evaluation domain (`i64`, booleans as
//! 0/1); the type checker keeps the two apart.

use std::fmt;

use super::VarId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Abs,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Type {
    Int,
    Bool,
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Type::Int => "integer",
            Type::Bool => "boolean",
        })
    }
}

impl UnaryOp {
    pub fn keyword(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Abs => "abs",
            UnaryOp::Not => "not",
        }
    }

    fn operand_type(self) -> Type {
        match self {
            UnaryOp::Not => Type::Bool,
            _ => Type::Int,
        }
    }

    fn result_type(self) -> Type {
        self.operand_type()
    }
}

impl BinaryOp {
    pub fn keyword(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Lt => "lt",
            BinaryOp::Le => "le",
            BinaryOp::Gt => "gt",
            BinaryOp::Ge => "ge",
            BinaryOp::Eq => "eq",
            BinaryOp::Ne => "ne",
            BinaryOp::And => "and",
            BinaryOp::Or => "or",
        }
    }

    fn operand_type(self) -> Type {
        match self {
            BinaryOp::And | BinaryOp::Or => Type::Bool,
            _ => Type::Int,
        }
    }

    fn result_type(self) -> Type {
        match self {
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul => Type::Int,
            _ => Type::Bool,
        }
    }
}

fn lookup_keyword(word: &str) -> Option<Result<UnaryOp, BinaryOp>> {
    Some(match word {
        "neg" => Ok(UnaryOp::Neg),
        "abs" => Ok(UnaryOp::Abs),
        "not" => Ok(UnaryOp::Not),
        "add" => Err(BinaryOp::Add),
        "sub" => Err(BinaryOp::Sub),
        "mul" => Err(BinaryOp::Mul),
        "lt" => Err(BinaryOp::Lt),
        "le" => Err(BinaryOp::Le),
        "gt" => Err(BinaryOp::Gt),
        "ge" => Err(BinaryOp::Ge),
        "eq" => Err(BinaryOp::Eq),
        "ne" => Err(BinaryOp::Ne),
        "and" => Err(BinaryOp::And),
        "or" => Err(BinaryOp::Or),
        _ => return None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(i64),
    Var(VarId),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

macro_rules! binary_ctor {
    ($($name:ident => $op:ident),* $(,)?) => {
        $(
            #[allow(clippy::should_implement_trait)]
            pub fn $name(lhs: Expr, rhs: Expr) -> Expr {
                Expr::Binary(BinaryOp::$op, Box::new(lhs), Box::new(rhs))
            }
        )*
    };
}

impl Expr {
    pub fn var(id: VarId) -> Expr {
        Expr::Var(id)
    }

    pub fn constant(k: i64) -> Expr {
        Expr::Const(k)
    }

    binary_ctor! {
        add => Add, sub => Sub, mul => Mul,
        lt => Lt, le => Le, gt => Gt, ge => Ge, eq => Eq, ne => Ne,
        and => And, or => Or,
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Expr {
        Expr::Unary(UnaryOp::Neg, Box::new(e))
    }

    pub fn abs(e: Expr) -> Expr {
        Expr::Unary(UnaryOp::Abs, Box::new(e))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnaryOp::Not, Box::new(e))
    }

    /// Visits every variable reference, left to right.
    pub fn for_each_var(&self, f: &mut impl FnMut(VarId)) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => f(*v),
            Expr::Unary(_, e) => e.for_each_var(f),
            Expr::Binary(_, l, r) => {
                l.for_each_var(f);
                r.for_each_var(f);
            }
        }
    }

    pub fn type_of(&self) -> Result<Type, TypeError> {
        match self {
            Expr::Const(_) | Expr::Var(_) => Ok(Type::Int),
            Expr::Unary(op, e) => {
                expect(op.keyword(), op.operand_type(), e.type_of()?)?;
                Ok(op.result_type())
            }
            Expr::Binary(op, l, r) => {
                expect(op.keyword(), op.operand_type(), l.type_of()?)?;
                expect(op.keyword(), op.operand_type(), r.type_of()?)?;
                Ok(op.result_type())
            }
        }
    }

    /// Conservative value range of the expression given per-variable
    /// bounds. Fails if any intermediate could leave the `i64` range.
    pub fn bounds(&self, var_bounds: &impl Fn(VarId) -> (i64, i64)) -> Option<(i64, i64)> {
        let fit = |lo: i128, hi: i128| -> Option<(i64, i64)> {
            Some((i64::try_from(lo).ok()?, i64::try_from(hi).ok()?))
        };
        match self {
            Expr::Const(k) => Some((*k, *k)),
            Expr::Var(v) => Some(var_bounds(*v)),
            Expr::Unary(op, e) => {
                let (lo, hi) = e.bounds(var_bounds)?;
                let (lo, hi) = (lo as i128, hi as i128);
                match op {
                    UnaryOp::Neg => fit(-hi, -lo),
                    UnaryOp::Abs => {
                        let top = lo.abs().max(hi.abs());
                        let bottom = if lo <= 0 && hi >= 0 {
                            0
                        } else {
                            lo.abs().min(hi.abs())
                        };
                        fit(bottom, top)
                    }
                    UnaryOp::Not => Some((0, 1)),
                }
            }
            Expr::Binary(op, l, r) => {
                let (a, b) = l.bounds(var_bounds)?;
                let (c, d) = r.bounds(var_bounds)?;
                let (a, b, c, d) = (a as i128, b as i128, c as i128, d as i128);
                match op {
                    BinaryOp::Add => fit(a + c, b + d),
                    BinaryOp::Sub => fit(a - d, b - c),
                    BinaryOp::Mul => {
                        let p = [a * c, a * d, b * c, b * d];
                        fit(*p.iter().min()?, *p.iter().max()?)
                    }
                    _ => Some((0, 1)),
                }
            }
        }
    }

    /// Evaluates with wrapping-free arithmetic. Callers must have checked
    /// [`Expr::bounds`] for the domains the lookup draws from.
    pub fn eval(&self, value_of: &impl Fn(VarId) -> i64) -> i64 {
        match self {
            Expr::Const(k) => *k,
            Expr::Var(v) => value_of(*v),
            Expr::Unary(op, e) => {
                let x = e.eval(value_of);
                match op {
                    UnaryOp::Neg => -x,
                    UnaryOp::Abs => x.abs(),
                    UnaryOp::Not => (x == 0) as i64,
                }
            }
            Expr::Binary(op, l, r) => {
                let x = l.eval(value_of);
                // short-circuit on boolean connectives
                match op {
                    BinaryOp::And if x == 0 => return 0,
                    BinaryOp::Or if x != 0 => return 1,
                    _ => {}
                }
                let y = r.eval(value_of);
                match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Lt => (x < y) as i64,
                    BinaryOp::Le => (x <= y) as i64,
                    BinaryOp::Gt => (x > y) as i64,
                    BinaryOp::Ge => (x >= y) as i64,
                    BinaryOp::Eq => (x == y) as i64,
                    BinaryOp::Ne => (x != y) as i64,
                    BinaryOp::And | BinaryOp::Or => (y != 0) as i64,
                }
            }
        }
    }

    /// Renders in the prefix syntax accepted by [`parse`].
    pub fn display<'n>(&self, name_of: impl Fn(VarId) -> &'n str) -> String {
        Rendered {
            expr: self,
            name_of,
            names: std::marker::PhantomData,
        }
        .to_string()
    }
}

fn expect(op: &'static str, want: Type, got: Type) -> Result<(), TypeError> {
    if want == got {
        Ok(())
    } else {
        Err(TypeError { op, want, got })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("operator `{op}` expects {want} operands, found {got}")]
pub struct TypeError {
    pub op: &'static str,
    pub want: Type,
    pub got: Type,
}

struct Rendered<'a, 'n, F> {
    expr: &'a Expr,
    name_of: F,
    names: std::marker::PhantomData<&'n str>,
}

impl<'a, 'n, F: Fn(VarId) -> &'n str> Rendered<'a, 'n, F> {
    fn write(&self, e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match e {
            Expr::Const(k) => write!(f, "{k}"),
            Expr::Var(v) => f.write_str((self.name_of)(*v)),
            Expr::Unary(op, x) => {
                write!(f, "{}(", op.keyword())?;
                self.write(x, f)?;
                f.write_str(")")
            }
            Expr::Binary(op, l, r) => {
                write!(f, "{}(", op.keyword())?;
                self.write(l, f)?;
                f.write_str(",")?;
                self.write(r, f)?;
                f.write_str(")")
            }
        }
    }
}

impl<'a, 'n, F: Fn(VarId) -> &'n str> fmt::Display for Rendered<'a, 'n, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.expr, f)
    }
}

/// Syntax error with a byte offset into the expression text.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{message} at offset {offset}")]
pub struct SyntaxError {
    pub offset: usize,
    pub message: String,
}

/// Parses the prefix expression syntax. Identifiers are resolved through
/// `resolve`; an unresolvable name is reported at its offset.
pub fn parse(text: &str, resolve: &impl Fn(&str) -> Option<VarId>) -> Result<Expr, SyntaxError> {
    let mut p = Parser {
        text,
        bytes: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr(resolve)?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.error("trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, ch: u8) -> Result<(), SyntaxError> {
        self.skip_ws();
        if self.bytes.get(self.pos) == Some(&ch) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{}`", ch as char)))
        }
    }

    fn expr(&mut self, resolve: &impl Fn(&str) -> Option<VarId>) -> Result<Expr, SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        match self.bytes.get(self.pos) {
            None => Err(self.error("unexpected end of expression")),
            Some(b) if b.is_ascii_digit() || *b == b'-' => {
                self.pos += 1;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let lit = &self.text[start..self.pos];
                lit.parse::<i64>()
                    .map(Expr::Const)
                    .map_err(|_| SyntaxError {
                        offset: start,
                        message: format!("invalid integer literal `{lit}`"),
                    })
            }
            Some(b) if b.is_ascii_alphabetic() || *b == b'_' => {
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric()
                        || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let word = &self.text[start..self.pos];
                self.skip_ws();
                if self.bytes.get(self.pos) != Some(&b'(') {
                    return resolve(word).map(Expr::Var).ok_or(SyntaxError {
                        offset: start,
                        message: format!("unknown variable `{word}`"),
                    });
                }
                let op = lookup_keyword(word).ok_or(SyntaxError {
                    offset: start,
                    message: format!("unknown operator `{word}`"),
                })?;
                self.pos += 1;
                match op {
                    Ok(unary) => {
                        let e = self.expr(resolve)?;
                        self.eat(b')')?;
                        Ok(Expr::Unary(unary, Box::new(e)))
                    }
                    Err(binary) => {
                        let l = self.expr(resolve)?;
                        self.eat(b',')?;
                        let r = self.expr(resolve)?;
                        self.eat(b')')?;
                        Ok(Expr::Binary(binary, Box::new(l), Box::new(r)))
                    }
                }
            }
            Some(_) => Err(self.error("expected integer, variable or operator")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: VarId) -> &'static str {
        ["l", "m", "x"][v]
    }

    fn resolve(s: &str) -> Option<VarId> {
        ["l", "m", "x"].iter().position(|n| *n == s)
    }

    #[test]
    fn parses_and_renders() {
        let e = parse(" eq( m , add(l, 2) ) ", &resolve).unwrap();
        assert_eq!(
            e,
            Expr::eq(Expr::var(1), Expr::add(Expr::var(0), Expr::constant(2)))
        );
        assert_eq!(e.display(names).to_string(), "eq(m,add(l,2))");
        assert_eq!(e.type_of(), Ok(Type::Bool));
        let vals = [2, 4, 0];
        assert_eq!(e.eval(&|v| vals[v]), 1);
    }

    #[test]
    fn negative_literals_and_unary() {
        let e = parse("lt(abs(neg(x)),-3)", &resolve).unwrap();
        assert_eq!(e.eval(&|_| -2), 0);
        assert_eq!(e.eval(&|_| 2), 0);
        let e = parse("not(and(lt(x,1),gt(x,-1)))", &resolve).unwrap();
        assert_eq!(e.eval(&|_| 0), 0);
        assert_eq!(e.eval(&|_| 5), 1);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let err = parse("eq(m,y)", &resolve).unwrap_err();
        assert_eq!(err.offset, 5);
        let err = parse("foo(m,l)", &resolve).unwrap_err();
        assert_eq!(err.offset, 0);
        let err = parse("eq(m l)", &resolve).unwrap_err();
        assert_eq!(err.offset, 5);
        let err = parse("eq(m,l) x", &resolve).unwrap_err();
        assert!(err.message.contains("trailing"));
        assert!(parse("99999999999999999999", &resolve).is_err());
    }

    #[test]
    fn type_errors() {
        let e = parse("add(lt(x,1),2)", &resolve).unwrap();
        assert!(e.type_of().is_err());
        let e = parse("add(x,1)", &resolve).unwrap();
        assert_eq!(e.type_of(), Ok(Type::Int));
        let e = parse("and(x,lt(x,1))", &resolve).unwrap();
        assert!(e.type_of().is_err());
    }

    #[test]
    fn bounds_detect_overflow() {
        let e = parse("eq(mul(x,x),1)", &resolve).unwrap();
        assert!(e.bounds(&|_| (0, 10)).is_some());
        assert!(e.bounds(&|_| (0, i64::MAX / 2)).is_none());
        let e = parse("abs(x)", &resolve).unwrap();
        assert_eq!(e.bounds(&|_| (-3, 2)), Some((0, 3)));
        assert!(e.bounds(&|_| (i64::MIN, 0)).is_none());
    }
}
