//! Family expressions such as `z^2 + t/z^3`.
//!
//! The grammar lives in `docs/grammar.md`. Literals are decimal numbers,
//! optionally suffixed by `i`; exponents are integers.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::berkovich::BerkMap;
use crate::cpoly::CPoly;
use crate::error::{Error, Result};
use crate::ppoly::PuiseuxPolynomial;
use crate::puiseux::{q_to_f64, qi, PuiseuxSeries, Q, C64};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// `re + im·i`; the parser produces purely real or purely imaginary literals.
    Num { re: Q, im: Q },
    Z,
    T,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilySpec {
    pub source: String,
    pub ast: Expr,
}

pub fn parse_family(text: &str) -> Result<FamilySpec> {
    let mut p = Parser { chars: text.chars().collect(), pos: 0 };
    let ast = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error(format!("unexpected '{}'", p.chars[p.pos])));
    }
    let spec = FamilySpec { source: text.to_string(), ast };
    let rf = eval(&spec.ast)?;
    if rf.num.degree() == 0 && rf.den.degree() == 0 {
        return Err(Error::Parse { position: 0, message: "expression has degree 0 in z".into() });
    }
    Ok(spec)
}

/// A `z`-free expression read as a Laurent polynomial in `t`.
pub fn parse_series(text: &str) -> Result<PuiseuxSeries> {
    let mut p = Parser { chars: text.chars().collect(), pos: 0 };
    let ast = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error(format!("unexpected '{}'", p.chars[p.pos])));
    }
    let rf = eval(&ast)?;
    if rf.num.degree() > 0 || rf.den.degree() > 0 {
        return Err(Error::Parse { position: 0, message: "expression depends on z".into() });
    }
    let den = rf.den.coeff(0);
    match den.terms() {
        [(e, c)] => Ok(rf.num.coeff(0).mul_monomial(C64::one() / *c, -*e)),
        _ => Err(Error::Parse { position: 0, message: "denominator must be a single power of t".into() }),
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, message: String) -> Error {
        Error::Parse { position: self.pos, message }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some('-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some('/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() != Some('^') {
            return Ok(base);
        }
        self.pos += 1;
        let paren = self.peek() == Some('(');
        if paren {
            self.pos += 1;
        }
        let neg = self.peek() == Some('-');
        if neg {
            self.pos += 1;
        }
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer exponent".into()));
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        let mut k: i64 = digits
            .parse()
            .map_err(|_| Error::Parse { position: start, message: "exponent too large".into() })?;
        if neg {
            k = -k;
        }
        if paren {
            self.expect(')')?;
        }
        Ok(Expr::Pow(Box::new(base), k))
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('z') => {
                self.pos += 1;
                Ok(Expr::Z)
            }
            Some('t') => {
                self.pos += 1;
                Ok(Expr::T)
            }
            Some('i') => {
                self.pos += 1;
                Ok(Expr::Num { re: Q::zero(), im: Q::one() })
            }
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) => Err(self.error(format!("unexpected '{c}'"))),
            None => Err(self.error("unexpected end of input".into())),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let mut int_part = String::new();
        let mut frac_part = String::new();
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            int_part.push(self.chars[self.pos]);
            self.pos += 1;
        }
        if self.pos < self.chars.len() && self.chars[self.pos] == '.' {
            self.pos += 1;
            while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                frac_part.push(self.chars[self.pos]);
                self.pos += 1;
            }
        }
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(Error::Parse { position: start, message: "malformed number".into() });
        }
        let overflow = || Error::Parse { position: start, message: "literal too long".into() };
        if int_part.len() + frac_part.len() > 17 {
            return Err(overflow());
        }
        let mantissa: i64 = format!("{int_part}{frac_part}").parse().map_err(|_| overflow())?;
        let value = Q::new(mantissa, 10i64.pow(frac_part.len() as u32));
        if self.pos < self.chars.len() && self.chars[self.pos] == 'i' {
            self.pos += 1;
            return Ok(Expr::Num { re: Q::zero(), im: value });
        }
        Ok(Expr::Num { re: value, im: Q::zero() })
    }
}

fn fmt_decimal(x: Q) -> String {
    let neg = x.is_negative();
    let x = x.abs();
    let int = x.numer() / x.denom();
    let mut rem = x - qi(int);
    let mut s = format!("{}{}", if neg { "-" } else { "" }, int);
    if !rem.is_zero() {
        s.push('.');
        let mut guard = 0;
        while !rem.is_zero() && guard < 40 {
            rem *= qi(10);
            let digit = rem.numer() / rem.denom();
            s.push(char::from(b'0' + digit as u8));
            rem -= qi(digit);
            guard += 1;
        }
    }
    s
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

struct Wrap<'a>(&'a Expr, bool);

impl fmt::Display for Wrap<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = precedence(self);
        match self {
            Expr::Num { re, im } => {
                if im.is_zero() {
                    write!(f, "{}", fmt_decimal(*re))
                } else if re.is_zero() {
                    write!(f, "{}i", fmt_decimal(*im))
                } else {
                    write!(f, "({} + {}i)", fmt_decimal(*re), fmt_decimal(*im))
                }
            }
            Expr::Z => write!(f, "z"),
            Expr::T => write!(f, "t"),
            Expr::Neg(a) => write!(f, "-{}", Wrap(a, precedence(a) < 3)),
            Expr::Add(a, b) => write!(f, "{} + {}", a, Wrap(b, precedence(b) <= 1)),
            Expr::Sub(a, b) => write!(f, "{} - {}", a, Wrap(b, precedence(b) <= 1)),
            Expr::Mul(a, b) => write!(f, "{}*{}", Wrap(a, precedence(a) < p), Wrap(b, precedence(b) <= p)),
            Expr::Div(a, b) => write!(f, "{}/{}", Wrap(a, precedence(a) < p), Wrap(b, precedence(b) <= p)),
            Expr::Pow(a, k) => write!(f, "{}^{}", Wrap(a, precedence(a) < 5), k),
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.ast)
    }
}

/// A quotient of polynomials before cancellation.
#[derive(Clone, Debug)]
struct RatFun {
    num: PuiseuxPolynomial,
    den: PuiseuxPolynomial,
}

impl RatFun {
    fn poly(p: PuiseuxPolynomial) -> Self {
        Self { num: p, den: PuiseuxPolynomial::constant(PuiseuxSeries::one()) }
    }

    fn add(&self, o: &Self) -> Self {
        if self.den == o.den {
            return Self { num: self.num.add(&o.num), den: self.den.clone() };
        }
        Self {
            num: self.num.mul(&o.den).add(&o.num.mul(&self.den)),
            den: self.den.mul(&o.den),
        }
    }

    fn neg(&self) -> Self {
        Self { num: self.num.neg(), den: self.den.clone() }
    }

    fn mul(&self, o: &Self) -> Self {
        Self { num: self.num.mul(&o.num), den: self.den.mul(&o.den) }
    }

    fn recip(&self) -> Result<Self> {
        if self.num.is_zero() {
            return Err(Error::Parse { position: 0, message: "division by zero".into() });
        }
        Ok(Self { num: self.den.clone(), den: self.num.clone() })
    }

    fn pow(&self, k: i64) -> Result<Self> {
        let base = if k < 0 { self.recip()? } else { self.clone() };
        let n = k.unsigned_abs() as u32;
        Ok(Self { num: base.num.pow(n), den: base.den.pow(n) })
    }
}

fn eval(e: &Expr) -> Result<RatFun> {
    Ok(match e {
        Expr::Num { re, im } => RatFun::poly(PuiseuxPolynomial::constant(PuiseuxSeries::constant(
            C64::new(q_to_f64(*re), q_to_f64(*im)),
        ))),
        Expr::Z => RatFun::poly(PuiseuxPolynomial::z()),
        Expr::T => RatFun::poly(PuiseuxPolynomial::constant(PuiseuxSeries::t_pow(qi(1)))),
        Expr::Neg(a) => eval(a)?.neg(),
        Expr::Add(a, b) => eval(a)?.add(&eval(b)?),
        Expr::Sub(a, b) => eval(a)?.add(&eval(b)?.neg()),
        Expr::Mul(a, b) => eval(a)?.mul(&eval(b)?),
        Expr::Div(a, b) => eval(a)?.mul(&eval(b)?.recip()?),
        Expr::Pow(a, k) => eval(a)?.pow(*k)?,
    })
}

impl FamilySpec {
    /// Numerator and denominator with common powers of `z` removed.
    pub fn cleared(&self) -> Result<(PuiseuxPolynomial, PuiseuxPolynomial)> {
        let rf = eval(&self.ast)?;
        let k = rf.num.zero_order().min(rf.den.zero_order());
        Ok((rf.num.div_z_pow(k), rf.den.div_z_pow(k)))
    }

    pub fn to_map(&self) -> Result<BerkMap> {
        let (n, d) = self.cleared()?;
        BerkMap::new(n, d)
    }

    /// The complex rational map at a parameter value.
    pub fn at(&self, t0: C64) -> Result<(CPoly, CPoly)> {
        let (n, d) = self.cleared()?;
        Ok((n.evaluate_at(t0)?, d.evaluate_at(t0)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mcmullen_clears_to_degree_five() {
        let f = parse_family("z^2 + t/z^3").unwrap().to_map().unwrap();
        assert_eq!(f.degree(), 5);
        assert_eq!(f.numerator().degree(), 5);
        assert_eq!(f.denominator().degree(), 3);
        assert_eq!(f.numerator().coeff(0), PuiseuxSeries::t_pow(qi(1)));
    }

    #[test]
    fn figure_family_has_degree_twelve() {
        let f = parse_family("z^2/(1-z^2) + t/z^10").unwrap().to_map().unwrap();
        assert_eq!(f.degree(), 12);
    }

    #[test]
    fn escaping_family_normalizes() {
        let f = parse_family("z^2 + 1/t").unwrap().to_map().unwrap();
        assert_eq!(f.numerator().coeff(2), PuiseuxSeries::t_pow(qi(1)));
        assert_eq!(f.numerator().coeff(0), PuiseuxSeries::one());
        assert_eq!(f.denominator().coeff(0), PuiseuxSeries::t_pow(qi(1)));
    }

    #[test]
    fn round_trip() {
        for s in ["z^2 + t/z^3", "z^2/(1-z^2) + t/z^10", "-(z - 2.5i)^-2*t", "z^2 - (z + 1) + 0.125*z/t"] {
            let a = parse_family(s).unwrap();
            let printed = a.to_string();
            let b = parse_family(&printed).unwrap();
            assert_eq!(a.ast, b.ast, "{s} -> {printed}");
        }
    }

    #[test]
    fn errors_carry_positions() {
        match parse_family("z^2 + * t") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 6),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_family("t + 1"), Err(Error::Parse { .. })));
        assert!(matches!(parse_family("z^x"), Err(Error::Parse { position: 2, .. })));
        assert!(parse_family("(z^2 - 1)/(z - 1)").unwrap().to_map().is_err());
    }
}
