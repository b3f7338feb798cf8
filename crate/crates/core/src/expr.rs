//! Arithmetic expressions over `x1`, `x2` for custom coefficients.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'x1' | 'x2' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func   := 'exp' | 'sin' | 'cos'
//! ```

use std::fmt;

use crate::error::{Error, Result};
use crate::mesh::Point;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X1,
    X2,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, src };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, x: Point) -> f64 {
        use Expr::*;
        match self {
            Num(v) => *v,
            X1 => x[0],
            X2 => x[1],
            Neg(a) => -a.eval(x),
            Add(a, b) => a.eval(x) + b.eval(x),
            Sub(a, b) => a.eval(x) - b.eval(x),
            Mul(a, b) => a.eval(x) * b.eval(x),
            Div(a, b) => a.eval(x) / b.eval(x),
            Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Exp(a) => a.eval(x).exp(),
            Sin(a) => a.eval(x).sin(),
            Cos(a) => a.eval(x).cos(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Expr::*;
        match self {
            Num(v) => write!(f, "{v:?}"),
            X1 => f.write_str("x1"),
            X2 => f.write_str("x2"),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, b) => write!(f, "({a} ^ {b})"),
            Exp(a) => write!(f, "exp({a})"),
            Sin(a) => write!(f, "sin({a})"),
            Cos(a) => write!(f, "cos({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
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
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number '{text}' in expression '{src}'")))?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else {
            return Err(Error::Config(format!(
                "unexpected character '{c}' at column {} in expression '{src}'",
                i + 1
            )));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> Error {
        let col = self.tokens.get(self.pos).map_or(self.src.chars().count(), |t| t.1);
        Error::Config(format!("{what} at column {} in expression '{}'", col + 1, self.src))
    }

    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some((Tok::Op(c), _)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{op}'")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some((tok, _)) = self.tokens.get(self.pos).cloned() else {
            return Err(self.error("unexpected end of expression"));
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x1" => Ok(Expr::X1),
                "x2" => Ok(Expr::X2),
                "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                "exp" | "sin" | "cos" => {
                    self.expect('(')?;
                    let arg = Box::new(self.expr()?);
                    self.expect(')')?;
                    Ok(match name.as_str() {
                        "exp" => Expr::Exp(arg),
                        "sin" => Expr::Sin(arg),
                        _ => Expr::Cos(arg),
                    })
                }
                _ => {
                    self.pos -= 1;
                    Err(self.error(&format!("unknown identifier '{name}'")))
                }
            },
            Tok::Op(_) => {
                self.pos -= 1;
                Err(self.error("unexpected operator"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(s: &str, x: Point) -> f64 {
        Expr::parse(s).unwrap().eval(x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", [0.0, 0.0]), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", [0.0, 0.0]), 512.0);
        assert_eq!(ev("-2 ^ 2", [0.0, 0.0]), -4.0);
        assert_eq!(ev("8 / 4 / 2", [0.0, 0.0]), 1.0);
        assert_eq!(ev("(1 + 2) * 3", [0.0, 0.0]), 9.0);
        assert_eq!(ev("2 ^ -1", [0.0, 0.0]), 0.5);
        assert_eq!(ev("1.5e2 + 1e-1", [0.0, 0.0]), 150.1);
    }

    #[test]
    fn variables_and_functions() {
        let x = [0.3, 0.9];
        let v = ev("exp((x1 - 0.5) * (x2 - 0.5))", x);
        assert!((v - ((0.3f64 - 0.5) * (0.9 - 0.5)).exp()).abs() < 1e-15);
        assert!((ev("sin(pi * x1) + cos(x2)", x) - ((std::f64::consts::PI * 0.3).sin() + 0.9f64.cos())).abs() < 1e-15);
    }

    #[test]
    fn errors_name_the_problem() {
        for (src, needle) in [
            ("1 +", "end of expression"),
            ("foo(1)", "unknown identifier 'foo'"),
            ("(1 + 2", "expected ')'"),
            ("1 2", "trailing"),
            ("1 $ 2", "unexpected character '$'"),
            ("* 2", "unexpected operator"),
        ] {
            let e = Expr::parse(src).unwrap_err().to_string();
            assert!(e.contains(needle), "{src}: {e}");
        }
    }

    proptest! {
        #[test]
        fn display_round_trips(a in -5.0f64..5.0, b in -5.0f64..5.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let src = format!("{a:?} * x1 - {b:?} / (1 + x2 ^ 2) + sin(x1 * x2)");
            let e = Expr::parse(&src).unwrap();
            let again = Expr::parse(&e.to_string()).unwrap();
            prop_assert_eq!(e.eval([x, y]).to_bits(), again.eval([x, y]).to_bits());
        }
    }
}
