//! Real-valued arithmetic expressions used to describe payoffs, transitions
//! and explicit maps.
//!
//! Grammar, from lowest to highest binding:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | ident | ('exp' | 'log') '(' sum ')' | '(' sum ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`, and is
//! right-associative. There is no implicit multiplication: `xy` is a single
//! identifier.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{name}` at byte {offset}")]
    UnknownVariable { name: String, offset: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("missing binding for variable `{0}`")]
    MissingBinding(String),
}

/// Variable names an expression may refer to, each mapped to a value slot.
///
/// Variables are resolved to their slot at parse time so evaluation is a
/// slice lookup. Several names may share a slot (aliases such as `x` for
/// `x1`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VarSet {
    names: Vec<(String, usize)>,
    slots: usize,
}

impl VarSet {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = VarSet::default();
        for n in names {
            set.push(n);
        }
        set
    }

    /// Adds a name in a fresh slot, returning the slot. Re-adding returns the existing slot.
    pub fn push(&mut self, name: impl Into<String>) -> usize {
        let name = name.into();
        if let Some(i) = self.index_of(&name) {
            return i;
        }
        self.names.push((name, self.slots));
        self.slots += 1;
        self.slots - 1
    }

    /// Adds `name` as another spelling of an existing slot.
    pub fn alias(&mut self, name: impl Into<String>, slot: usize) {
        assert!(slot < self.slots, "alias to unknown slot {slot}");
        let name = name.into();
        if self.index_of(&name).is_none() {
            self.names.push((name, slot));
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().find(|(n, _)| n == name).map(|&(_, s)| s)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(|(n, _)| n.as_str())
    }

    /// Number of value slots an evaluation needs.
    pub fn len(&self) -> usize {
        self.slots
    }

    pub fn is_empty(&self) -> bool {
        self.slots == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
}

/// Expression tree. Immutable once built; subtrees are shared.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var { index: usize, name: Arc<str> },
    Unary(UnaryOp, Arc<Expr>),
    Binary(BinOp, Arc<Expr>, Arc<Expr>),
}

impl Expr {
    /// Evaluates with `values[i]` bound to the variable of index `i`.
    pub fn eval(&self, values: &[f64]) -> Result<f64, ExprError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var { index, name } => values
                .get(*index)
                .copied()
                .ok_or_else(|| ExprError::MissingBinding(name.to_string())),
            Expr::Unary(op, a) => {
                let a = a.eval(values)?;
                match op {
                    UnaryOp::Neg => Ok(-a),
                    UnaryOp::Exp => Ok(a.exp()),
                    UnaryOp::Log => {
                        if a > 0.0 {
                            Ok(a.ln())
                        } else {
                            Err(ExprError::Domain(format!("log of non-positive value {a}")))
                        }
                    }
                }
            }
            Expr::Binary(op, a, b) => {
                let a = a.eval(values)?;
                let b = b.eval(values)?;
                match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div => {
                        if b == 0.0 {
                            Err(ExprError::Domain(format!("division of {a} by zero")))
                        } else {
                            Ok(a / b)
                        }
                    }
                    BinOp::Pow => pow(a, b),
                }
            }
        }
    }

    /// Evaluates against named bindings. Every variable of the tree must be bound.
    pub fn eval_named(&self, bindings: &HashMap<String, f64>) -> Result<f64, ExprError> {
        let mut values = Vec::new();
        self.bind_into(bindings, &mut values)?;
        self.eval(&values)
    }

    fn bind_into(
        &self,
        bindings: &HashMap<String, f64>,
        values: &mut Vec<f64>,
    ) -> Result<(), ExprError> {
        match self {
            Expr::Const(_) => Ok(()),
            Expr::Var { index, name } => {
                let v = *bindings
                    .get(name.as_ref())
                    .ok_or_else(|| ExprError::MissingBinding(name.to_string()))?;
                if values.len() <= *index {
                    values.resize(*index + 1, f64::NAN);
                }
                values[*index] = v;
                Ok(())
            }
            Expr::Unary(_, a) => a.bind_into(bindings, values),
            Expr::Binary(_, a, b) => {
                a.bind_into(bindings, values)?;
                b.bind_into(bindings, values)
            }
        }
    }

    /// Names of the variables occurring in the tree, in first-occurrence order.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var { name, .. } => {
                if !out.contains(&name.as_ref()) {
                    out.push(name);
                }
            }
            Expr::Unary(_, a) => a.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

fn pow(base: f64, exponent: f64) -> Result<f64, ExprError> {
    let integral = exponent.fract() == 0.0 && exponent.is_finite();
    if integral {
        if base == 0.0 && exponent < 0.0 {
            return Err(ExprError::Domain(format!("0^{exponent}")));
        }
        if exponent.abs() <= i32::MAX as f64 {
            return Ok(base.powi(exponent as i32));
        }
        return Ok(base.powf(exponent));
    }
    if base > 0.0 {
        Ok(base.powf(exponent))
    } else {
        Err(ExprError::Domain(format!(
            "{base}^{exponent} needs a positive base"
        )))
    }
}

/// Fully parenthesized rendering; parsing the output gives back the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                    write!(f, "(-{})", -c)
                } else {
                    write!(f, "{c:?}")
                }
            }
            Expr::Var { name, .. } => f.write_str(name),
            Expr::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            Expr::Unary(UnaryOp::Exp, a) => write!(f, "exp({a})"),
            Expr::Unary(UnaryOp::Log, a) => write!(f, "log({a})"),
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => '+',
                    BinOp::Sub => '-',
                    BinOp::Mul => '*',
                    BinOp::Div => '/',
                    BinOp::Pow => '^',
                };
                write!(f, "({a} {sym} {b})")
            }
        }
    }
}

pub fn parse(text: &str, vars: &VarSet) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        vars,
    };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a VarSet,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn syntax(&self, message: &str) -> ExprError {
        let message = match self.src.get(self.pos) {
            Some(&c) => format!("{message} (found `{}`)", c as char),
            None => format!("{message} (found end of input)"),
        };
        ExprError::Syntax {
            offset: self.pos,
            message,
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Expr::Binary(op, Arc::new(lhs), Arc::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Arc::new(lhs), Arc::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr::Unary(UnaryOp::Neg, Arc::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Arc::new(base), Arc::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => Err(self.syntax("expected a number, variable or `(`")),
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", c as char)))
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            let from = *p;
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - from
        };
        let mut p = self.pos;
        let mut n = digits(&mut p);
        if p < s.len() && s[p] == b'.' {
            p += 1;
            n += digits(&mut p);
        }
        if n == 0 {
            return Err(self.syntax("malformed number"));
        }
        if p < s.len() && (s[p] == b'e' || s[p] == b'E') {
            let mut q = p + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) > 0 {
                p = q;
            }
        }
        let text = std::str::from_utf8(&s[start..p]).expect("ascii slice");
        let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        self.pos = p;
        Ok(Expr::Const(value))
    }

    fn ident(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        let func = match name {
            "exp" => Some(UnaryOp::Exp),
            "log" => Some(UnaryOp::Log),
            _ => None,
        };
        if let Some(op) = func {
            if self.peek() == Some(b'(') {
                self.pos += 1;
                let arg = self.sum()?;
                self.expect(b')')?;
                return Ok(Expr::Unary(op, Arc::new(arg)));
            }
        }
        match self.vars.index_of(name) {
            Some(index) => Ok(Expr::Var {
                index,
                name: Arc::from(name),
            }),
            None => Err(ExprError::UnknownVariable {
                name: name.to_string(),
                offset: start,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn xyz() -> VarSet {
        VarSet::new(["x", "y", "z"])
    }

    const MCKINSEY: &str = "(1+x)*(1+y*z)/(2*(1+x*y)^2)";

    #[test]
    fn mckinsey_payoff_parses_and_evaluates() {
        let e = parse(MCKINSEY, &xyz()).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0, 1.0]).unwrap(), 0.5);
        // grid node x = 0.5, y = 1, z = 1
        let v = e.eval(&[0.5, 1.0, 1.0]).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn atoms_and_functions() {
        let vars = VarSet::new(["x"]);
        assert!(matches!(parse("x", &vars).unwrap(), Expr::Var { index: 0, .. }));
        assert_eq!(parse("exp(0)", &vars).unwrap().eval(&[]).unwrap(), 1.0);
        let err = parse("log(x)", &vars).unwrap().eval(&[-1.0]).unwrap_err();
        assert!(matches!(err, ExprError::Domain(_)));
    }

    #[test]
    fn syntax_error_offset() {
        let err = parse("x + * y", &VarSet::new(["x", "y"])).unwrap_err();
        assert!(matches!(err, ExprError::Syntax { offset: 4, .. }), "{err:?}");
        assert!(matches!(
            parse("(x", &VarSet::new(["x"])).unwrap_err(),
            ExprError::Syntax { offset: 2, .. }
        ));
        assert!(matches!(
            parse("x y", &VarSet::new(["x", "y"])).unwrap_err(),
            ExprError::Syntax { offset: 2, .. }
        ));
    }

    #[test]
    fn unknown_variable_is_named() {
        let err = parse("x + xy", &VarSet::new(["x", "y"])).unwrap_err();
        assert_eq!(
            err,
            ExprError::UnknownVariable {
                name: "xy".into(),
                offset: 4
            }
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let vars = VarSet::new(["x"]);
        let ev = |s: &str, x: f64| parse(s, &vars).unwrap().eval(&[x]).unwrap();
        assert_eq!(ev("-x^2", 3.0), -9.0);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("8/4/2", 0.0), 1.0);
        assert_eq!(ev("5-2-1", 0.0), 2.0);
        assert_eq!(ev("1+2*3", 0.0), 7.0);
        assert_eq!(ev("2^-1", 0.0), 0.5);
        assert_eq!(ev("-2*-3", 0.0), 6.0);
        assert_eq!(ev("1.5e2 + .5", 0.0), 150.5);
    }

    #[test]
    fn domain_errors() {
        let vars = VarSet::new(["x"]);
        let ev = |s: &str, x: f64| parse(s, &vars).unwrap().eval(&[x]);
        assert!(ev("1/x", 0.0).is_err());
        assert!(ev("x^-1", 0.0).is_err());
        assert!(ev("x^0.5", -4.0).is_err());
        assert_eq!(ev("x^3", -2.0).unwrap(), -8.0);
        assert!(ev("x^0.5", 0.0).is_err());
        assert_eq!(ev("x^0", 0.0).unwrap(), 1.0);
    }

    #[test]
    fn named_bindings() {
        let e = parse(MCKINSEY, &xyz()).unwrap();
        let b: HashMap<String, f64> = [("x", 0.0), ("y", 0.0), ("z", 1.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        assert_eq!(e.eval_named(&b).unwrap(), 0.5);
        let mut partial = b.clone();
        partial.remove("z");
        assert_eq!(
            e.eval_named(&partial).unwrap_err(),
            ExprError::MissingBinding("z".into())
        );
        assert_eq!(e.variables(), vec!["x", "y", "z"]);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..100.0).prop_map(Expr::Const),
            (0usize..3).prop_map(|i| Expr::Var {
                index: i,
                name: Arc::from(["x", "y", "z"][i])
            }),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                (inner.clone(), prop_oneof![Just(UnaryOp::Neg), Just(UnaryOp::Exp), Just(UnaryOp::Log)])
                    .prop_map(|(a, op)| Expr::Unary(op, Arc::new(a))),
                (
                    inner.clone(),
                    inner,
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ]
                )
                    .prop_map(|(a, b, op)| Expr::Binary(op, Arc::new(a), Arc::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr(), x in -3.0f64..3.0, y in -3.0f64..3.0, z in 0.0f64..3.0) {
            let printed = e.to_string();
            let reparsed = parse(&printed, &xyz()).unwrap();
            prop_assert_eq!(&reparsed, &e);
            prop_assert_eq!(reparsed.to_string(), printed);
            let a = e.eval(&[x, y, z]);
            let b = reparsed.eval(&[x, y, z]);
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
            }
        }
    }
}
