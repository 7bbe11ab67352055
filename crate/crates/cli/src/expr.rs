//! A small arithmetic language for closed forms.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | variable | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Variables are `t`, `s` and `xi` (also written `ξ`). Functions: `exp`,
//! `ln`, `abs`, `sign`, `sqrt`, `pow`, `min`, `max`, and
//! `piecewise(c1, v1, c2, v2, ..., default)` which returns the first `vi`
//! whose `ci` is positive. Names bound by the caller (such as `mu`) are
//! unary functions.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

pub type Unary = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    S,
    Xi,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Var::T => "t",
            Var::S => "s",
            Var::Xi => "xi",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Builtin {
    Exp,
    Ln,
    Abs,
    Sign,
    Sqrt,
    Pow,
    Min,
    Max,
    Piecewise,
}

#[derive(Clone)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Builtin, Vec<Node>),
    Bound(Unary, Box<Node>),
}

/// A parsed expression, cheap to clone and safe to share across threads.
#[derive(Clone)]
pub struct Expr {
    source: String,
    root: Arc<Node>,
    vars: Vec<Var>,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Env {
    pub t: f64,
    pub s: f64,
    pub xi: f64,
}

impl Expr {
    #[cfg(test)]
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        Self::parse_with(source, &HashMap::new())
    }

    /// Parses with extra unary functions available by name.
    pub fn parse_with(source: &str, functions: &HashMap<String, Unary>) -> Result<Self, ParseError> {
        let tokens = tokenize(source)?;
        let mut p = Parser { tokens, pos: 0, functions, vars: Vec::new() };
        let root = p.expr()?;
        if let Some(tok) = p.tokens.get(p.pos) {
            return Err(ParseError { position: tok.offset, message: format!("unexpected {}", tok.kind) });
        }
        let mut vars = p.vars;
        vars.sort_by_key(|v| *v as u8);
        vars.dedup();
        Ok(Expr { source: source.to_string(), root: Arc::new(root), vars })
    }

    /// Variables that occur in the expression.
    pub fn variables(&self) -> &[Var] {
        &self.vars
    }

    pub fn eval(&self, env: &Env) -> f64 {
        eval(&self.root, env)
    }

    #[cfg(test)]
    pub fn eval_t(&self, t: f64) -> f64 {
        self.eval(&Env { t, ..Env::default() })
    }
}

fn eval(n: &Node, env: &Env) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var(Var::T) => env.t,
        Node::Var(Var::S) => env.s,
        Node::Var(Var::Xi) => env.xi,
        Node::Neg(a) => -eval(a, env),
        Node::Add(a, b) => eval(a, env) + eval(b, env),
        Node::Sub(a, b) => eval(a, env) - eval(b, env),
        Node::Mul(a, b) => eval(a, env) * eval(b, env),
        Node::Div(a, b) => eval(a, env) / eval(b, env),
        Node::Pow(a, b) => power(eval(a, env), eval(b, env)),
        Node::Bound(f, a) => f(eval(a, env)),
        Node::Call(f, args) => {
            let x = |i: usize| eval(&args[i], env);
            match f {
                Builtin::Exp => x(0).exp(),
                Builtin::Ln => x(0).ln(),
                Builtin::Abs => x(0).abs(),
                Builtin::Sign => {
                    let v = x(0);
                    if v > 0.0 {
                        1.0
                    } else if v < 0.0 {
                        -1.0
                    } else {
                        v
                    }
                }
                Builtin::Sqrt => x(0).sqrt(),
                Builtin::Pow => power(x(0), x(1)),
                Builtin::Min => args.iter().map(|a| eval(a, env)).fold(f64::INFINITY, f64::min),
                Builtin::Max => args.iter().map(|a| eval(a, env)).fold(f64::NEG_INFINITY, f64::max),
                Builtin::Piecewise => {
                    let mut i = 0;
                    while i + 1 < args.len() {
                        if eval(&args[i], env) > 0.0 {
                            return eval(&args[i + 1], env);
                        }
                        i += 2;
                    }
                    eval(&args[args.len() - 1], env)
                }
            }
        }
    }
}

/// `a^b`, using the real cube root style branch for odd integer powers of
/// negative bases.
fn power(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Op(char),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Num(v) => write!(f, "number {v}"),
            TokenKind::Ident(s) => write!(f, "name '{s}'"),
            TokenKind::Op(c) => write!(f, "'{c}'"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (off, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|(_, d)| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i].1 == 'e' || chars[i].1 == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j].1 == '+' || chars[j].1 == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].1.is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].1.is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let end = chars.get(i).map(|c| c.0).unwrap_or(src.len());
            let text = &src[off..end];
            let v: f64 = text
                .parse()
                .map_err(|_| ParseError { position: chars[start].0, message: format!("bad number '{text}'") })?;
            out.push(Token { kind: TokenKind::Num(v), offset: off });
        } else if c.is_alphabetic() || c == '_' {
            let start = off;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let end = chars.get(i).map(|c| c.0).unwrap_or(src.len());
            out.push(Token { kind: TokenKind::Ident(src[start..end].to_string()), offset: off });
        } else if "+-*/^(),".contains(c) {
            out.push(Token { kind: TokenKind::Op(c), offset: off });
            i += 1;
        } else {
            return Err(ParseError { position: off, message: format!("unexpected character '{c}'") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    functions: &'a HashMap<String, Unary>,
    vars: Vec<Var>,
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token { kind: TokenKind::Op(c), .. }) => Some(*c),
            _ => None,
        }
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map(|t| t.offset).unwrap_or_else(|| self.tokens.last().map(|t| t.offset + 1).unwrap_or(0))
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError { position: self.offset(), message: format!("expected '{c}'") })
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == '+' { Node::Add(Box::new(lhs), Box::new(rhs)) } else { Node::Sub(Box::new(lhs), Box::new(rhs)) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == '*' { Node::Mul(Box::new(lhs), Box::new(rhs)) } else { Node::Div(Box::new(lhs), Box::new(rhs)) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.peek_op() == Some('+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn args(&mut self) -> Result<Vec<Node>, ParseError> {
        self.expect('(')?;
        let mut out = vec![self.expr()?];
        while self.peek_op() == Some(',') {
            self.pos += 1;
            out.push(self.expr()?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let offset = self.offset();
        let Some(tok) = self.tokens.get(self.pos).cloned() else {
            return Err(ParseError { position: offset, message: "unexpected end of expression".into() });
        };
        match tok.kind {
            TokenKind::Num(v) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            TokenKind::Op('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            TokenKind::Op(c) => Err(ParseError { position: offset, message: format!("unexpected '{c}'") }),
            TokenKind::Ident(name) => {
                self.pos += 1;
                let var = match name.as_str() {
                    "t" => Some(Var::T),
                    "s" => Some(Var::S),
                    "xi" | "ξ" => Some(Var::Xi),
                    _ => None,
                };
                if let Some(v) = var {
                    self.vars.push(v);
                    return Ok(Node::Var(v));
                }
                if name == "pi" {
                    return Ok(Node::Num(std::f64::consts::PI));
                }
                let (builtin, arity): (Builtin, Option<usize>) = match name.as_str() {
                    "exp" => (Builtin::Exp, Some(1)),
                    "ln" => (Builtin::Ln, Some(1)),
                    "abs" => (Builtin::Abs, Some(1)),
                    "sign" => (Builtin::Sign, Some(1)),
                    "sqrt" => (Builtin::Sqrt, Some(1)),
                    "pow" => (Builtin::Pow, Some(2)),
                    "min" => (Builtin::Min, None),
                    "max" => (Builtin::Max, None),
                    "piecewise" => (Builtin::Piecewise, None),
                    _ => {
                        let Some(f) = self.functions.get(&name).cloned() else {
                            return Err(ParseError { position: offset, message: format!("unknown name '{name}'") });
                        };
                        let args = self.args()?;
                        if args.len() != 1 {
                            return Err(ParseError { position: offset, message: format!("{name} takes one argument") });
                        }
                        return Ok(Node::Bound(f, Box::new(args.into_iter().next().unwrap())));
                    }
                };
                let args = self.args()?;
                if let Some(n) = arity {
                    if args.len() != n {
                        return Err(ParseError {
                            position: offset,
                            message: format!("{name} takes {n} argument(s), got {}", args.len()),
                        });
                    }
                }
                if builtin == Builtin::Piecewise && args.len() % 2 == 0 {
                    return Err(ParseError {
                        position: offset,
                        message: "piecewise needs condition/value pairs and a default".into(),
                    });
                }
                Ok(Node::Call(builtin, args))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn at(src: &str, t: f64, s: f64) -> f64 {
        Expr::parse(src).unwrap().eval(&Env { t, s, xi: 0.0 })
    }

    #[test]
    fn precedence() {
        assert_eq!(at("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(at("2 ^ 3 ^ 2", 0.0, 0.0), 512.0);
        assert_eq!(at("-2 ^ 2", 0.0, 0.0), -4.0);
        assert_eq!(at("(1 + 2) * 3", 0.0, 0.0), 9.0);
        assert_eq!(at("8 / 4 / 2", 0.0, 0.0), 1.0);
        assert_eq!(at("2 ^ -1", 0.0, 0.0), 0.5);
    }

    #[test]
    fn variables_and_functions() {
        assert_eq!(at("exp(s - t)", 1.0, 1.0), 1.0);
        assert_eq!(at("sign(s) * ln(1 + abs(s))", 0.0, -(1f64.exp() - 1.0)), -1.0);
        assert_eq!(at("min(t, s, 3)", 5.0, 4.0), 3.0);
        assert_eq!(at("max(t, s)", 5.0, 4.0), 5.0);
        assert_eq!(at("pow(s, 3)", 0.0, -2.0), -8.0);
        assert_eq!(Expr::parse("ξ * 2").unwrap().eval(&Env { xi: 1.5, ..Env::default() }), 3.0);
        assert_eq!(Expr::parse("t + xi").unwrap().variables(), &[Var::T, Var::Xi]);
        assert_eq!(at("1.5e-3 * 2E2", 0.0, 0.0), 0.3);
    }

    #[test]
    fn piecewise_picks_first_positive_condition() {
        let src = "piecewise(-s, s * exp(t), s)";
        assert_eq!(at(src, 1.0, -1.0), -(1f64.exp()));
        assert_eq!(at(src, 1.0, 2.0), 2.0);
        assert_eq!(at("piecewise(s - 1, 10, s, 5, 0)", 0.0, 0.5), 5.0);
    }

    #[test]
    fn bound_functions() {
        let mut f: HashMap<String, Unary> = HashMap::new();
        f.insert("mu".into(), Arc::new(|x: f64| 2.0 * x));
        let e = Expr::parse_with("exp(mu(s) - mu(t))", &f).unwrap();
        assert_eq!(e.eval(&Env { t: 1.0, s: 1.5, xi: 0.0 }), 1f64.exp());
    }

    #[test]
    fn errors_carry_position() {
        let e = Expr::parse("1 + foo(2)").unwrap_err();
        assert_eq!(e.position, 4);
        assert!(Expr::parse("(1 + 2").is_err());
        assert!(Expr::parse("1 + ").is_err());
        assert!(Expr::parse("1 $ 2").is_err());
        assert!(Expr::parse("exp(1, 2)").is_err());
        assert!(Expr::parse("piecewise(1, 2)").is_err());
        assert!(Expr::parse("1 2").is_err());
    }

    proptest! {
        #[test]
        fn linear_forms_evaluate_exactly(a in -100i32..100, b in -100i32..100, t in -10i32..10) {
            let e = Expr::parse(&format!("{a} * t + {b}")).unwrap();
            prop_assert_eq!(e.eval_t(t as f64), (a * t + b) as f64);
        }

        #[test]
        fn printed_numbers_round_trip(x in -1e6f64..1e6) {
            let e = Expr::parse(&format!("{x:e}")).unwrap();
            prop_assert_eq!(e.eval_t(0.0), x.abs() * x.signum());
        }
    }
}
