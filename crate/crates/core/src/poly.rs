//! Integer-coefficient polynomials in up to a handful of variables: exact
//! evaluation at rationals, coefficient-degree gradient bounds on the unit
//! cube, and a small parser for the CLI surface (`X`, `Y`, `Z` or `X1..Xn`,
//! integer coefficients, `+ - * ^`).

use crate::error::{Error, Result};
use crate::rational::{rat_pow, BigInt, BigRational};
use serde::{Deserialize, Serialize};
use std::fmt;

/// A polynomial as a list of monomials `(coefficient, exponent vector)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntPolynomial {
    vars: usize,
    terms: Vec<(BigInt, Vec<u32>)>,
}

impl IntPolynomial {
    pub fn new(vars: usize, terms: Vec<(BigInt, Vec<u32>)>) -> Result<Self> {
        if vars == 0 {
            return Err(Error::Domain(
                "polynomial needs at least one variable".into(),
            ));
        }
        for (_, exps) in &terms {
            if exps.len() != vars {
                return Err(Error::Domain("exponent vector length mismatch".into()));
            }
        }
        let mut p = Self { vars, terms };
        p.normalize();
        Ok(p)
    }

    fn normalize(&mut self) {
        // descending lexicographic exponent order reads naturally (X before Y)
        self.terms.sort_by(|a, b| b.1.cmp(&a.1));
        let mut merged: Vec<(BigInt, Vec<u32>)> = Vec::with_capacity(self.terms.len());
        for (c, e) in self.terms.drain(..) {
            match merged.last_mut() {
                Some((mc, me)) if *me == e => *mc += c,
                _ => merged.push((c, e)),
            }
        }
        merged.retain(|(c, _)| *c != 0);
        self.terms = merged;
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn terms(&self) -> &[(BigInt, Vec<u32>)] {
        &self.terms
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(_, e)| e.iter().all(|x| *x == 0))
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(_, e)| e.iter().sum())
            .max()
            .unwrap_or(0)
    }

    /// Exact value at rational arguments.
    pub fn eval(&self, point: &[BigRational]) -> Result<BigRational> {
        if point.len() != self.vars {
            return Err(Error::Domain(format!(
                "polynomial in {} variables evaluated at {} arguments",
                self.vars,
                point.len()
            )));
        }
        let mut acc = BigRational::new();
        for (c, exps) in &self.terms {
            let mut term = BigRational::from(c);
            for (x, e) in point.iter().zip(exps) {
                if *e > 0 {
                    term *= rat_pow(x, *e as i32)?;
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    /// `max_j sup_{[0,1]^t} |dP/dX_j|` bounded by the coefficient-degree sum
    /// `max_j sum_monomials |c| * alpha_j`; exact integer, certified on the
    /// unit cube.
    pub fn gradient_bound_unit_cube(&self) -> BigInt {
        let mut best = BigInt::new();
        for j in 0..self.vars {
            let mut s = BigInt::new();
            for (c, exps) in &self.terms {
                if exps[j] > 0 {
                    s += BigInt::from(c.abs_ref()) * BigInt::from(exps[j]);
                }
            }
            best = best.max(s);
        }
        best
    }

    /// Parse `"3*X^2*Y - 2*Z + 7"` style expressions over `X, Y, Z` or
    /// `X1..Xn`. `vars` fixes the variable count; names beyond it fail.
    pub fn parse(input: &str, vars: usize) -> Result<Self> {
        Parser {
            tokens: tokenize(input)?,
            pos: 0,
            vars,
        }
        .parse()
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let names = ["X", "Y", "Z"];
        for (i, (c, exps)) in self.terms.iter().enumerate() {
            let mut parts = Vec::new();
            let coeff_abs = BigInt::from(c.abs_ref());
            let has_var = exps.iter().any(|e| *e > 0);
            if coeff_abs != 1 || !has_var {
                parts.push(coeff_abs.to_string());
            }
            for (j, e) in exps.iter().enumerate() {
                if *e == 0 {
                    continue;
                }
                let name = if self.vars <= 3 {
                    names[j].to_string()
                } else {
                    format!("X{}", j + 1)
                };
                if *e == 1 {
                    parts.push(name);
                } else {
                    parts.push(format!("{name}^{e}"));
                }
            }
            let term = parts.join("*");
            if i == 0 {
                if *c < 0 {
                    write!(f, "-{term}")?;
                } else {
                    write!(f, "{term}")?;
                }
            } else if *c < 0 {
                write!(f, " - {term}")?;
            } else {
                write!(f, " + {term}")?;
            }
        }
        Ok(())
    }
}

impl Serialize for IntPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Dto<'a> {
            vars: usize,
            terms: Vec<(String, &'a Vec<u32>)>,
        }
        Dto {
            vars: self.vars,
            terms: self.terms.iter().map(|(c, e)| (c.to_string(), e)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Dto {
            vars: usize,
            terms: Vec<(String, Vec<u32>)>,
        }
        let dto = Dto::deserialize(d)?;
        let terms = dto
            .terms
            .into_iter()
            .map(|(c, e)| Ok((crate::rational::int_from_str(&c)?, e)))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        IntPolynomial::new(dto.vars, terms).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Int(BigInt),
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
}

fn tokenize(input: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = input.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                tokens.push(Token::Plus);
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus);
                i += 1;
            }
            '*' => {
                tokens.push(Token::Star);
                i += 1;
            }
            '^' => {
                tokens.push(Token::Caret);
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                tokens.push(Token::Int(crate::rational::int_from_str(&s)?));
            }
            'X' | 'x' | 'Y' | 'y' | 'Z' | 'z' => {
                // X, Y, Z or X<digits>
                let mut idx = match c.to_ascii_uppercase() {
                    'X' => 0,
                    'Y' => 1,
                    _ => 2,
                };
                i += 1;
                if (c == 'X' || c == 'x') && i < chars.len() && chars[i].is_ascii_digit() {
                    let start = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    let s: String = chars[start..i].iter().collect();
                    let n: usize = s
                        .parse()
                        .map_err(|_| Error::Malformed(format!("bad variable index {s}")))?;
                    if n == 0 {
                        return Err(Error::Malformed("variable indices start at 1".into()));
                    }
                    idx = n - 1;
                }
                tokens.push(Token::Var(idx));
            }
            _ => {
                return Err(Error::Malformed(format!(
                    "unexpected character {c:?} in polynomial"
                )))
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    vars: usize,
}

impl Parser {
    fn parse(mut self) -> Result<IntPolynomial> {
        let mut terms: Vec<(BigInt, Vec<u32>)> = Vec::new();
        let mut sign = BigInt::from(1);
        let mut expect_term = true;
        while self.pos < self.tokens.len() {
            match &self.tokens[self.pos] {
                Token::Plus => {
                    sign = BigInt::from(1);
                    self.pos += 1;
                    expect_term = true;
                }
                Token::Minus => {
                    if expect_term {
                        sign = -sign;
                    } else {
                        sign = BigInt::from(-1);
                    }
                    self.pos += 1;
                    expect_term = true;
                }
                _ => {
                    let (c, e) = self.parse_term()?;
                    terms.push((BigInt::from(&sign * &c), e));
                    sign = BigInt::from(1);
                    expect_term = false;
                }
            }
        }
        if expect_term && !terms.is_empty() {
            return Err(Error::Malformed("dangling sign in polynomial".into()));
        }
        if terms.is_empty() {
            return Err(Error::Malformed("empty polynomial".into()));
        }
        IntPolynomial::new(self.vars, terms)
    }

    fn parse_term(&mut self) -> Result<(BigInt, Vec<u32>)> {
        let mut coeff = BigInt::from(1);
        let mut exps = vec![0u32; self.vars];
        let mut saw_factor = false;
        loop {
            match self.tokens.get(self.pos) {
                Some(Token::Int(n)) => {
                    coeff *= n;
                    self.pos += 1;
                    saw_factor = true;
                }
                Some(Token::Var(idx)) => {
                    let idx = *idx;
                    if idx >= self.vars {
                        return Err(Error::Malformed(format!(
                            "variable index {} exceeds the declared {} variable(s)",
                            idx + 1,
                            self.vars
                        )));
                    }
                    self.pos += 1;
                    let mut e: u32 = 1;
                    if matches!(self.tokens.get(self.pos), Some(Token::Caret)) {
                        self.pos += 1;
                        match self.tokens.get(self.pos) {
                            Some(Token::Int(n)) => {
                                e = n
                                    .to_u32()
                                    .ok_or_else(|| Error::Malformed("exponent too large".into()))?;
                                self.pos += 1;
                            }
                            _ => return Err(Error::Malformed("expected exponent after ^".into())),
                        }
                    }
                    exps[idx] = exps[idx]
                        .checked_add(e)
                        .ok_or_else(|| Error::Malformed("exponent overflow".into()))?;
                    saw_factor = true;
                }
                Some(Token::Star) => {
                    self.pos += 1;
                }
                _ => break,
            }
        }
        if !saw_factor {
            return Err(Error::Malformed("expected a term".into()));
        }
        Ok((coeff, exps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn parse_and_display() {
        let p = IntPolynomial::parse("X-Y", 2).unwrap();
        assert_eq!(p.terms().len(), 2);
        assert_eq!(p.total_degree(), 1);
        assert_eq!(format!("{p}"), "X - Y");

        let q = IntPolynomial::parse("3*X^2*Y - 2*Z + 7", 3).unwrap();
        assert_eq!(q.total_degree(), 3);
        assert_eq!(
            q.eval(&[rat(1, 1), rat(2, 1), rat(3, 1)]).unwrap(),
            rat(7, 1)
        );

        // spec's vanishing example: q X - q Y - 2 with q = 3^27
        let v = IntPolynomial::parse("7625597484987*X - 7625597484987*Y - 2", 2).unwrap();
        assert_eq!(v.total_degree(), 1);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(IntPolynomial::parse("X +", 1).is_err());
        assert!(IntPolynomial::parse("W", 1).is_err());
        assert!(IntPolynomial::parse("X1*X2", 1).is_err());
        assert!(IntPolynomial::parse("", 1).is_err());
    }

    #[test]
    fn gradient_bound_on_unit_cube() {
        // P = X^2: sup |2X| on [0,1] is 2
        let p = IntPolynomial::parse("X^2", 1).unwrap();
        assert_eq!(p.gradient_bound_unit_cube(), BigInt::from(2));

        // P = 3X^2Y - 2Z + 7: dX = 6XY (<=6), dY = 3X^2 (<=3), dZ = -2
        let q = IntPolynomial::parse("3*X^2*Y - 2*Z + 7", 3).unwrap();
        assert_eq!(q.gradient_bound_unit_cube(), BigInt::from(6));
    }

    #[test]
    fn evaluation_is_exact() {
        let p = IntPolynomial::parse("X^2 - 2*X*Y + Y^2", 2).unwrap();
        // (x - y)^2 at (2/27, 1/27)
        let v = p.eval(&[rat(2, 27), rat(1, 27)]).unwrap();
        assert_eq!(v, rat(1, 729));
    }

    #[test]
    fn normalization_merges_and_drops() {
        let p = IntPolynomial::parse("X + X - 2*X", 1).unwrap();
        assert!(p.terms().is_empty());
        assert!(p.is_constant());
        assert_eq!(p.eval(&[rat(5, 1)]).unwrap(), rat(0, 1));
    }

    #[test]
    fn serde_round_trip() {
        let p = IntPolynomial::parse("3*X^2*Y - 2*Z + 7", 3).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: IntPolynomial = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn x123_variables() {
        let p = IntPolynomial::parse("X1*X2 - X3^2", 3).unwrap();
        assert_eq!(
            p.eval(&[rat(2, 1), rat(3, 1), rat(1, 1)]).unwrap(),
            rat(5, 1)
        );
    }
}
