use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::expr::{Expr, Func, Symbol};
use crate::error::Error;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, Error> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && i + 1 < b.len() && (b[i + 1] as char).is_ascii_digit()) {
            let start = i;
            while i < b.len() && (b[i] as char).is_ascii_digit() {
                i += 1;
            }
            let int_part = &src[start..i];
            let mut value: BigRational = if int_part.is_empty() {
                BigRational::zero()
            } else {
                BigRational::from_integer(int_part.parse::<BigInt>().unwrap())
            };
            if i < b.len() && b[i] == b'.' {
                i += 1;
                let fs = i;
                while i < b.len() && (b[i] as char).is_ascii_digit() {
                    i += 1;
                }
                let frac = &src[fs..i];
                if !frac.is_empty() {
                    let num: BigInt = frac.parse().unwrap();
                    let den = num_traits::pow(BigInt::from(10), frac.len());
                    value += BigRational::new(num, den);
                }
            } else if i + 1 < b.len() && b[i] == b'/' && (b[i + 1] as char).is_ascii_digit() {
                // int/int literal binds tighter than division
                let save = i;
                i += 1;
                let ds = i;
                while i < b.len() && (b[i] as char).is_ascii_digit() {
                    i += 1;
                }
                let followed_by_name = i < b.len() && ((b[i] as char).is_ascii_alphabetic() || b[i] == b'.' || b[i] == b'(');
                let after_op = matches!(out.last(), Some((_, Tok::Op('/' | '^'))));
                if followed_by_name || after_op {
                    i = save;
                } else {
                    let den: BigInt = src[ds..i].parse().unwrap();
                    if den.is_zero() {
                        return Err(Error::Parse { pos: ds, msg: "zero denominator".into() });
                    }
                    value /= BigRational::from_integer(den);
                }
            }
            out.push((start, Tok::Num(value)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(Error::Parse { pos: i, msg: format!("unexpected character '{}'", c) });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
    allowed: Option<&'a dyn Fn(&str) -> bool>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn at(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.len)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, Error> {
        Err(Error::Parse { pos: self.at(), msg: msg.into() })
    }

    fn expect(&mut self, c: char) -> Result<(), Error> {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{}'", c))
        }
    }

    fn expr(&mut self) -> Result<Expr, Error> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Some(Tok::Op('+')) => {
                    self.pos += 1;
                    terms.push(self.term()?);
                }
                Some(Tok::Op('-')) => {
                    self.pos += 1;
                    terms.push(-self.term()?);
                }
                _ => break,
            }
        }
        Ok(Expr::add(terms))
    }

    fn term(&mut self) -> Result<Expr, Error> {
        let mut factors = vec![self.factor()?];
        loop {
            match self.peek() {
                Some(Tok::Op('*')) => {
                    self.pos += 1;
                    factors.push(self.factor()?);
                }
                Some(Tok::Op('/')) => {
                    self.pos += 1;
                    factors.push(self.factor()?.recip());
                }
                _ => break,
            }
        }
        Ok(Expr::mul(factors))
    }

    fn factor(&mut self) -> Result<Expr, Error> {
        if self.peek() == Some(&Tok::Op('-')) {
            self.pos += 1;
            return Ok(-self.factor()?);
        }
        let base = self.base()?;
        if self.peek() == Some(&Tok::Op('^')) {
            self.pos += 1;
            let exp = self.exponent()?;
            return Ok(Expr::pow(base, exp));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Expr, Error> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(-self.exponent()?)
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Num(r)) => {
                let r = r.clone();
                self.pos += 1;
                Ok(Expr::rational(r))
            }
            Some(Tok::Ident(_)) => self.base(),
            _ => self.err("expected exponent"),
        }
    }

    fn base(&mut self) -> Result<Expr, Error> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return self.err("unexpected end of input"),
        };
        match tok {
            Tok::Num(r) => {
                self.pos += 1;
                Ok(Expr::rational(r))
            }
            Tok::Op('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let start = self.at();
                self.pos += 1;
                if self.peek() == Some(&Tok::Op('(')) {
                    self.pos += 1;
                    if name == "int" {
                        return self.integral();
                    }
                    let arg = self.expr()?;
                    self.expect(')')?;
                    if name == "sqrt" {
                        return Ok(Expr::sqrt(arg));
                    }
                    match Func::from_name(&name) {
                        Some(f) => Ok(Expr::call(f, arg)),
                        None => Err(Error::Parse { pos: start, msg: format!("unknown function '{}'", name) }),
                    }
                } else {
                    if let Some(ok) = self.allowed {
                        if !ok(&name) {
                            return Err(Error::Parse { pos: start, msg: format!("unknown symbol '{}'", name) });
                        }
                    }
                    Ok(Expr::sym(&name))
                }
            }
            Tok::Op(c) => self.err(format!("unexpected '{}'", c)),
        }
    }

    /// `int(integrand, var, lower[, upper])`
    fn integral(&mut self) -> Result<Expr, Error> {
        let integrand = self.expr()?;
        self.expect(',')?;
        let var = match self.peek() {
            Some(Tok::Ident(n)) => Symbol::new(n),
            _ => return self.err("expected integration variable"),
        };
        self.pos += 1;
        self.expect(',')?;
        let lower = match self.factor()?.as_num() {
            Some(r) => r.clone(),
            None => return self.err("integral base point must be a number"),
        };
        let upper = if self.peek() == Some(&Tok::Op(',')) {
            self.pos += 1;
            self.expr()?
        } else {
            Expr::symbol(&var)
        };
        self.expect(')')?;
        Ok(Expr::integral_to(integrand, &var, lower, upper))
    }
}

/// Parses with no restriction on symbol names.
pub fn parse(src: &str) -> Result<Expr, Error> {
    parse_inner(src, None)
}

/// Parses, rejecting symbols for which `allowed` is false.
pub fn parse_with(src: &str, allowed: &dyn Fn(&str) -> bool) -> Result<Expr, Error> {
    parse_inner(src, Some(allowed))
}

fn parse_inner(src: &str, allowed: Option<&dyn Fn(&str) -> bool>) -> Result<Expr, Error> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, len: src.len(), allowed };
    if p.peek().is_none() {
        return p.err("empty expression");
    }
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

/// Reserved jet symbols: `x`, `u`, `u1`..`u9`, `w`, `c1`..`c9`.
pub fn is_reserved_symbol(name: &str) -> bool {
    if name == "x" || name == "u" || name == "w" {
        return true;
    }
    let (head, tail) = name.split_at(1);
    (head == "u" || head == "c") && tail.len() == 1 && tail.chars().all(|c| ('1'..='9').contains(&c))
}

pub fn parse_jet(src: &str) -> Result<Expr, Error> {
    parse_with(src, &is_reserved_symbol)
}

pub fn one() -> BigRational {
    BigRational::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let e = parse("-x^2").unwrap();
        assert_eq!(e, -(Expr::pow(Expr::sym("x"), Expr::num(2))));
        let e = parse("2^3^1").is_err();
        assert!(e);
        let x = Expr::sym("x");
        assert_eq!(parse("x^5/20").unwrap(), Expr::pow(x.clone(), Expr::num(5)) / Expr::num(20));
        assert_eq!(parse("x^(5/20)").unwrap(), Expr::pow(x, Expr::frac(1, 4)));
    }

    #[test]
    fn rational_and_decimal_literals() {
        assert_eq!(parse("3/4").unwrap(), Expr::frac(3, 4));
        assert_eq!(parse("0.25").unwrap(), Expr::frac(1, 4));
        assert_eq!(parse("1/x").unwrap(), Expr::sym("x").recip());
    }

    #[test]
    fn reserved_symbols() {
        assert!(parse_jet("u1*u9 + c3*w").is_ok());
        assert!(parse_jet("y").is_err());
        assert!(parse_jet("u10").is_err());
    }

    #[test]
    fn errors_carry_position() {
        match parse("x + * 2") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{:?}", other),
        }
    }
}
