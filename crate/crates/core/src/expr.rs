//! Arithmetic expressions over `x1..xn` used as scalar field specifications.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr  := term (("+" | "-") term)*
//! term  := unary (("*" | "/") unary)*
//! unary := ("+" | "-") unary | power
//! power := atom ("^" unary)?
//! atom  := number | "x" index | "abs(" expr ")" | "norm(x)" | "(" expr ")"
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x1^2`
//! is `-(x1^2)`. The Unicode minus sign is accepted as `-`.

use crate::error::{Error, Result};
use crate::vector::norm;

const MAX_DEPTH: usize = 256;
const MAX_LEN: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    /// Zero-based coordinate index.
    Var(usize),
    Norm,
    Abs(Box<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Evaluates at `x`. Coordinates past the end of `x` read as zero.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Number(v) => *v,
            Expr::Var(i) => x.get(*i).copied().unwrap_or(0.0),
            Expr::Norm => norm(x),
            Expr::Abs(e) => e.eval(x).abs(),
            Expr::Neg(e) => -e.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => pow(a.eval(x), b.eval(x)),
        }
    }

    /// Highest variable number used (`x3` gives 3), or 0 if none.
    pub fn max_variable(&self) -> usize {
        match self {
            Expr::Number(_) | Expr::Norm => 0,
            Expr::Var(i) => i + 1,
            Expr::Abs(e) | Expr::Neg(e) => e.max_variable(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.max_variable().max(b.max_variable())
            }
        }
    }
}

fn pow(base: f64, exp: f64) -> f64 {
    if exp.fract() == 0.0 && exp.abs() <= i32::MAX as f64 {
        base.powi(exp as i32)
    } else {
        base.powf(exp)
    }
}

/// Parses an expression. Errors carry the character offset of the problem.
pub fn parse(src: &str) -> Result<Expr> {
    let chars: Vec<char> = src.chars().map(|c| if c == '\u{2212}' { '-' } else { c }).collect();
    if chars.len() > MAX_LEN {
        return Err(Error::Parse {
            position: MAX_LEN,
            message: "expression too long".into(),
        });
    }
    let mut p = Parser { chars, pos: 0, depth: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

/// Parses and checks that only `x1..x{dimension}` are referenced.
pub fn parse_for_dimension(src: &str, dimension: usize) -> Result<Expr> {
    let e = parse(src)?;
    if e.max_variable() > dimension {
        let name = format!("x{}", e.max_variable());
        let position = src.find(&name).map_or(0, |b| src[..b].chars().count());
        return Err(Error::Parse {
            position,
            message: format!("{name} exceeds dimension {dimension}"),
        });
    }
    Ok(e)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("expression nested too deeply"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                break;
            }
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                break;
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        self.enter()?;
        let e = if self.eat('-') {
            Expr::Neg(Box::new(self.unary()?))
        } else if self.eat('+') {
            self.unary()?
        } else {
            self.power()?
        };
        self.depth -= 1;
        Ok(e)
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.word(),
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Parser| {
            while p.chars.get(p.pos).is_some_and(|c| c.is_ascii_digit()) {
                p.pos += 1;
            }
        };
        digits(self);
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.chars.get(self.pos), Some('e' | 'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.chars.get(self.pos), Some('+' | '-')) {
                self.pos += 1;
            }
            if self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                digits(self);
            } else {
                self.pos = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::Number(v)),
            _ => Err(Error::Parse {
                position: start,
                message: format!("invalid number `{text}`"),
            }),
        }
    }

    fn word(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_') {
            self.pos += 1;
        }
        let word: String = self.chars[start..self.pos].iter().collect();
        match word.as_str() {
            "abs" => {
                self.expect('(')?;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(Expr::Abs(Box::new(e)))
            }
            "norm" => {
                self.expect('(')?;
                if self.peek() != Some('x') {
                    return Err(self.error("norm takes the argument `x`"));
                }
                self.pos += 1;
                self.expect(')')?;
                Ok(Expr::Norm)
            }
            w if w.starts_with('x') && w.len() > 1 && w[1..].bytes().all(|b| b.is_ascii_digit()) => {
                match w[1..].parse::<usize>() {
                    Ok(i) if (1..=1 << 20).contains(&i) => Ok(Expr::Var(i - 1)),
                    _ => Err(Error::Parse {
                        position: start,
                        message: format!("invalid variable `{w}` (variables are x1, x2, ...)"),
                    }),
                }
            }
            _ => Err(Error::Parse {
                position: start,
                message: format!("unknown name `{word}`"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(src: &str, x: &[f64]) -> f64 {
        parse(src).unwrap().eval(x)
    }

    fn position(src: &str) -> usize {
        match parse(src) {
            Err(Error::Parse { position, .. }) => position,
            other => panic!("{src}: {other:?}"),
        }
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1 + 2 * 3", &[]), 7.0);
        assert_eq!(ev("(1 + 2) * 3", &[]), 9.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &[]), 512.0);
        assert_eq!(ev("-2 ^ 2", &[]), -4.0);
        assert_eq!(ev("2 ^ -1", &[]), 0.5);
        assert_eq!(ev("8 / 4 / 2", &[]), 1.0);
        assert_eq!(ev("1 - 2 - 3", &[]), -4.0);
        assert_eq!(ev("3 \u{2212} 1", &[]), 2.0);
        assert_eq!(ev("1.5e1 + .5", &[]), 15.5);
    }

    #[test]
    fn variables_and_functions() {
        let x = [3.0, -4.0];
        assert_eq!(ev("x1 * x2", &x), -12.0);
        assert_eq!(ev("norm(x)", &x), 5.0);
        assert_eq!(ev("abs(x2)", &x), 4.0);
        assert_eq!(ev("2*x1*x2/norm(x)^2", &[3.0, 4.0]), 24.0 / 25.0);
        assert_eq!(parse("x1 + x3").unwrap().max_variable(), 3);
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(position("1 + "), 4);
        assert_eq!(position("1 + * 2"), 4);
        assert_eq!(position("x0"), 0);
        assert_eq!(position("2 * foo"), 4);
        assert_eq!(position("(1 + 2"), 6);
        assert_eq!(position("norm(y)"), 5);
        assert_eq!(position("1 2"), 2);
        assert_eq!(position("1e999"), 0);
        assert_eq!(position("x1 # 2"), 3);
    }

    #[test]
    fn dimension_check() {
        assert!(parse_for_dimension("x1 + x2", 2).is_ok());
        match parse_for_dimension("x1 + x3", 2) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deep_nesting_is_rejected() {
        let deep = format!("{}1{}", "(".repeat(10_000), ")".repeat(10_000));
        assert!(matches!(parse(&deep), Err(Error::Parse { .. })));
        let minus = format!("{}1", "-".repeat(10_000));
        assert!(matches!(parse(&minus), Err(Error::Parse { .. })));
        let ok = format!("{}1{}", "(".repeat(100), ")".repeat(100));
        assert_eq!(ev(&ok, &[]), 1.0);
    }

    proptest! {
        #[test]
        fn integer_arithmetic_matches(a in -1000i64..1000, b in -1000i64..1000, c in 1i64..1000) {
            let src = format!("{a} + ({b}) * {c} - ({a})");
            prop_assert_eq!(ev(&src, &[]), (b * c) as f64);
        }

        #[test]
        fn never_panics(s in "[-+*/^()x0-9. a-z\u{2212}]{0,40}") {
            let _ = parse(&s);
        }
    }
}
