//! A small arithmetic language for metrics, Hamiltonians and data.
//!
//! Variables: `x1..xn` (coordinates), `t` (gradient magnitude or time),
//! `m` (gradient magnitude in evolution problems), `d` (distance to a
//! reference point), constants `pi` and `e`. Functions: `cos`, `sin`,
//! `exp`, `ln`, `sqrt`, `abs`, `min`, `max`. Operators `+ - * / ^` with the
//! usual precedence; `^` is right-associative and binds tighter than unary
//! minus.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    /// Zero-based coordinate index; `x1` is `X(0)`.
    X(usize),
    T,
    M,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Cos,
    Sin,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<Self> {
        Some(match name {
            "cos" => Func::Cos,
            "sin" => Func::Sin,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn arity(self) -> Option<usize> {
        match self {
            Func::Min | Func::Max => None,
            _ => Some(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// Values bound to the variables during evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Env<'a> {
    pub x: &'a [f64],
    pub t: f64,
    pub m: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let tokens = lex(source)?;
        let mut p = Parser { tokens: &tokens, pos: 0 };
        let root = p.sum()?;
        if p.pos != tokens.len() {
            return Err(Error::Expr(format!("unexpected {} in {source:?}", tokens[p.pos])));
        }
        Ok(Self { source: source.to_string(), root })
    }

    /// Parses and rejects variables outside `allowed`; coordinates are
    /// allowed up to `dim`.
    pub fn parse_with(source: &str, dim: usize, allowed: &[Var]) -> Result<Self> {
        let e = Self::parse(source)?;
        for v in e.variables() {
            let ok = match v {
                Var::X(i) => i < dim,
                other => allowed.contains(&other),
            };
            if !ok {
                return Err(Error::Expr(format!("variable {} is not available in {source:?}", var_name(v))));
            }
        }
        Ok(e)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn variables(&self) -> Vec<Var> {
        fn walk(n: &Node, out: &mut Vec<Var>) {
            match n {
                Node::Num(_) => {}
                Node::Var(v) => {
                    if !out.contains(v) {
                        out.push(*v)
                    }
                }
                Node::Neg(a) => walk(a, out),
                Node::Bin(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Node::Call(_, args) => args.iter().for_each(|a| walk(a, out)),
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    pub fn uses(&self, v: Var) -> bool {
        self.variables().contains(&v)
    }

    /// Evaluates; a coordinate beyond `env.x` reads as NaN.
    pub fn eval(&self, env: &Env) -> f64 {
        eval(&self.root, env)
    }
}

fn var_name(v: Var) -> String {
    match v {
        Var::X(i) => format!("x{}", i + 1),
        Var::T => "t".into(),
        Var::M => "m".into(),
        Var::D => "d".into(),
    }
}

fn eval(n: &Node, env: &Env) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var(Var::X(i)) => env.x.get(*i).copied().unwrap_or(f64::NAN),
        Node::Var(Var::T) => env.t,
        Node::Var(Var::M) => env.m,
        Node::Var(Var::D) => env.d,
        Node::Neg(a) => -eval(a, env),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, env), eval(b, env));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                _ => a.powf(b),
            }
        }
        Node::Call(f, args) => {
            let first = eval(&args[0], env);
            match f {
                Func::Cos => first.cos(),
                Func::Sin => first.sin(),
                Func::Exp => first.exp(),
                Func::Ln => first.ln(),
                Func::Sqrt => first.sqrt(),
                Func::Abs => first.abs(),
                Func::Min => args[1..].iter().fold(first, |m, a| m.min(eval(a, env))),
                Func::Max => args[1..].iter().fold(first, |m, a| m.max(eval(a, env))),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "number {v}"),
            Token::Ident(s) => write!(f, "name {s:?}"),
            Token::Op(c) => write!(f, "{c:?}"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse().map_err(|_| Error::Expr(format!("bad number {text:?}")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::Expr(format!("unexpected character {c:?} in {src:?}")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(Error::Expr(match self.peek() {
                Some(t) => format!("expected {op:?}, found {t}"),
                None => format!("expected {op:?} at end of input"),
            }))
        }
    }

    fn sum(&mut self) -> Result<Node> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat('+') {
                '+'
            } else if self.eat('-') {
                '-'
            } else {
                return Ok(lhs);
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.product()?));
        }
    }

    fn product(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                '*'
            } else if self.eat('/') {
                '/'
            } else {
                return Ok(lhs);
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            // right operand may carry its own sign: 2^-1
            let exp = self.unary()?;
            return Ok(Node::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let Some(tok) = self.peek().cloned() else {
            return Err(Error::Expr("unexpected end of input".into()));
        };
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Node::Num(v)),
            Token::Op('(') => {
                let inner = self.sum()?;
                self.expect(')')?;
                Ok(inner)
            }
            Token::Op(c) => Err(Error::Expr(format!("unexpected {c:?}"))),
            Token::Ident(name) => self.named(&name),
        }
    }

    fn named(&mut self, name: &str) -> Result<Node> {
        if let Some(f) = Func::lookup(name) {
            self.expect('(')?;
            let mut args = vec![self.sum()?];
            while self.eat(',') {
                args.push(self.sum()?);
            }
            self.expect(')')?;
            match f.arity() {
                Some(k) if args.len() != k => Err(Error::Expr(format!("{name} takes {k} argument, got {}", args.len()))),
                None if args.len() < 2 => Err(Error::Expr(format!("{name} takes at least 2 arguments"))),
                _ => Ok(Node::Call(f, args)),
            }
        } else {
            Ok(match name {
                "t" => Node::Var(Var::T),
                "m" => Node::Var(Var::M),
                "d" => Node::Var(Var::D),
                "pi" => Node::Num(std::f64::consts::PI),
                "e" => Node::Num(std::f64::consts::E),
                _ => match name.strip_prefix('x').and_then(|k| k.parse::<usize>().ok()) {
                    Some(k) if k >= 1 => Node::Var(Var::X(k - 1)),
                    _ => return Err(Error::Expr(format!("unknown name {name:?}"))),
                },
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(src: &str, x: &[f64], t: f64, d: f64) -> f64 {
        Expr::parse(src).unwrap().eval(&Env { x, t, m: 0.0, d })
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(at("1 + 2 * 3", &[], 0.0, 0.0), 7.0);
        assert_eq!(at("2 ^ 3 ^ 2", &[], 0.0, 0.0), 512.0);
        assert_eq!(at("-2 ^ 2", &[], 0.0, 0.0), -4.0);
        assert_eq!(at("2 ^ -1", &[], 0.0, 0.0), 0.5);
        assert_eq!(at("8 / 4 / 2", &[], 0.0, 0.0), 1.0);
        assert_eq!(at("1 - 2 - 3", &[], 0.0, 0.0), -4.0);
        assert_eq!(at("1.5e2 + 2E-1", &[], 0.0, 0.0), 150.2);
    }

    #[test]
    fn variables_and_functions() {
        assert_eq!(at("min(t, 3) - cos(d)", &[], 5.0, 0.0), 2.0);
        assert_eq!(at("max(x1, x2, -1)", &[0.25, 0.5], 0.0, 0.0), 0.5);
        assert!((at("sqrt(x1^2 + x2^2)", &[3.0, 4.0], 0.0, 0.0) - 5.0).abs() < 1e-15);
        assert!((at("cos(pi) + ln(e)", &[], 0.0, 0.0)).abs() < 1e-15);
        assert!(at("x3", &[1.0], 0.0, 0.0).is_nan());
    }

    #[test]
    fn errors_are_reported() {
        for bad in ["", "1 +", "(1", "foo", "cos(1, 2)", "min(1)", "1 $ 2", "x0", "2 3"] {
            assert!(matches!(Expr::parse(bad), Err(Error::Expr(_))), "{bad}");
        }
        assert!(Expr::parse_with("t + d", 2, &[Var::T]).is_err());
        assert!(Expr::parse_with("x3", 2, &[]).is_err());
        assert!(Expr::parse_with("t + x2", 2, &[Var::T]).is_ok());
    }
}
