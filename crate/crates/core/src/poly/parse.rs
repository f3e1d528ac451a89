//! Polynomial text: `3/2*x1^2*y - z^2 + (1+sqrt(2))*w + 7`.
//!
//! Terms are joined by `+`/`-`; a term is an optional coefficient (a rational,
//! or a parenthesized field element) followed by `*`-separated factors
//! `var[^int]`. Whitespace is ignored. Printing is grlex-descending with unit
//! coefficients elided.

use std::fmt;

use num_traits::{One, Signed};
use thiserror::Error;

use super::{Monomial, Polynomial, RingSignature, Var};
use crate::field::{parse_field_element, FieldElement, FieldError, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl From<FieldError> for ParseError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::Parse { position, message } => ParseError { position, message },
            other => ParseError {
                position: 0,
                message: other.to_string(),
            },
        }
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
    sig: RingSignature,
}

impl<'a> Parser<'a> {
    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            position: self.pos,
            message: message.into(),
        }
    }

    fn bytes(&self) -> &'a [u8] {
        self.text.as_bytes()
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.bytes()[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes().get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len() && self.bytes()[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.text[start..self.pos])
    }

    fn coefficient(&mut self) -> Result<Option<FieldElement>, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let start = self.pos;
                let close = self.text[start..]
                    .find(')')
                    .map(|i| start + i)
                    .ok_or_else(|| self.err("unclosed '('"))?;
                // sqrt(d) nests one more pair of parentheses
                let close = match self.text[start..close].contains('(') {
                    true => self.text[close + 1..]
                        .find(')')
                        .map(|i| close + 1 + i)
                        .ok_or_else(|| self.err("unclosed '('"))?,
                    false => close,
                };
                let value = parse_field_element(&self.text[start..close], start)?;
                self.pos = close + 1;
                Ok(Some(value))
            }
            Some(c) if c.is_ascii_digit() => {
                let num = self.digits().expect("digit present");
                let mut text = num.to_string();
                if self.eat(b'/') {
                    let den = self.digits().ok_or_else(|| self.err("expected denominator"))?;
                    text.push('/');
                    text.push_str(den);
                }
                let start = self.pos;
                parse_field_element(&text, start)
                    .map(Some)
                    .map_err(ParseError::from)
            }
            _ => Ok(None),
        }
    }

    fn variable(&mut self) -> Result<Option<usize>, ParseError> {
        let start = match self.peek() {
            Some(b'x' | b'y' | b'z' | b'w') => self.pos,
            _ => return Ok(None),
        };
        self.pos += 1;
        if self.bytes()[start] == b'x' {
            while self.pos < self.text.len() && self.bytes()[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        let name = &self.text[start..self.pos];
        let var: Var = name.parse().map_err(|_| ParseError {
            position: start,
            message: format!("unknown variable '{}'", name),
        })?;
        self.sig.index(var).map(Some).ok_or(ParseError {
            position: start,
            message: format!("variable '{}' is not in {}", name, self.sig),
        })
    }

    fn term(&mut self) -> Result<(Monomial, FieldElement), ParseError> {
        let start = self.pos;
        let mut mono = Monomial::one(self.sig.nvars());
        let coeff = self.coefficient()?;
        let mut need_factor = false;
        if coeff.is_some() {
            // optional '*' between coefficient and factors
            if self.eat(b'*') {
                need_factor = true;
            }
        }
        let mut any_factor = false;
        loop {
            match self.variable()? {
                Some(idx) => {
                    let mut exp = 1u32;
                    if self.eat(b'^') {
                        let d = self.digits().ok_or_else(|| self.err("expected exponent"))?;
                        exp = d.parse().map_err(|_| self.err("exponent too large"))?;
                    }
                    mono.0[idx] += exp;
                    any_factor = true;
                    if !self.eat(b'*') {
                        break;
                    }
                }
                None if need_factor || any_factor => return Err(self.err("expected a variable")),
                None => break,
            }
        }
        if coeff.is_none() && !any_factor {
            return Err(ParseError {
                position: start.max(self.pos),
                message: "expected a term".into(),
            });
        }
        Ok((mono, coeff.unwrap_or_else(FieldElement::one)))
    }
}

pub(super) fn parse_polynomial(text: &str, sig: RingSignature) -> Result<Polynomial, ParseError> {
    let mut p = Parser { text, pos: 0, sig };
    let mut out = Polynomial::zero(sig);
    let mut first = true;
    loop {
        let neg = match p.peek() {
            None if first => return Err(p.err("empty polynomial")),
            None => break,
            Some(b'-') => {
                p.pos += 1;
                true
            }
            Some(b'+') => {
                p.pos += 1;
                false
            }
            Some(_) if first => false,
            Some(c) => return Err(p.err(format!("unexpected '{}'", c as char))),
        };
        first = false;
        let (m, c) = p.term()?;
        out.add_term(m, &if neg { -c } else { c });
    }
    Ok(out)
}

fn write_monomial(m: &Monomial, sig: RingSignature, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let mut first = true;
    for (i, &e) in m.0.iter().enumerate() {
        if e == 0 {
            continue;
        }
        if !first {
            write!(f, "*")?;
        }
        first = false;
        write!(f, "{}", sig.var(i))?;
        if e > 1 {
            write!(f, "^{}", e)?;
        }
    }
    Ok(())
}

pub(super) fn write_polynomial(p: &Polynomial, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if p.is_zero() {
        return write!(f, "0");
    }
    for (k, (m, c)) in p.terms.iter().rev().enumerate() {
        let first = k == 0;
        match c {
            FieldElement::Rational(r) => {
                let mag: Rational = r.abs();
                match (first, r.is_negative()) {
                    (true, true) => write!(f, "-")?,
                    (true, false) => {}
                    (false, true) => write!(f, " - ")?,
                    (false, false) => write!(f, " + ")?,
                }
                if m.is_one() {
                    write!(f, "{}", mag)?;
                } else {
                    if !mag.is_one() {
                        write!(f, "{}*", mag)?;
                    }
                    write_monomial(m, p.sig, f)?;
                }
            }
            FieldElement::Quad(_) => {
                if !first {
                    write!(f, " + ")?;
                }
                write!(f, "({})", c)?;
                if !m.is_one() {
                    write!(f, "*")?;
                    write_monomial(m, p.sig, f)?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig(n: usize, w: bool) -> RingSignature {
        RingSignature::new(n, w).unwrap()
    }

    #[test]
    fn two_term_example() {
        let p = Polynomial::parse("x1^2*x2^2*y + z^2", sig(2, false)).unwrap();
        assert_eq!(p.num_terms(), 2);
        assert_eq!(p.to_string(), "x1^2*x2^2*y + z^2");
    }

    #[test]
    fn canonical_printing() {
        let s = sig(1, true);
        let p = Polynomial::parse(" 1 - z*z +  2 x1 * w - 3/6 y ", s).unwrap();
        assert_eq!(p.to_string(), "2*x1*w - z^2 - 1/2*y + 1");
        let q = Polynomial::parse("(1+sqrt(2))*z - (sqrt(2))", s).unwrap();
        assert_eq!(q.to_string(), "(1+sqrt(2))*z + (-sqrt(2))");
        assert_eq!(Polynomial::parse(&q.to_string(), s).unwrap(), q);
        assert_eq!(Polynomial::parse("0", s).unwrap().to_string(), "0");
    }

    #[test]
    fn errors_carry_positions() {
        let s = sig(1, false);
        let e = Polynomial::parse("x1^", s).unwrap_err();
        assert!(matches!(e, crate::poly::PolyError::Parse(ParseError { position: 3, .. })));
        assert!(Polynomial::parse("x2", s).is_err());
        assert!(Polynomial::parse("w", s).is_err());
        assert!(Polynomial::parse("", s).is_err());
        assert!(Polynomial::parse("x1 +", s).is_err());
        assert!(Polynomial::parse("3*", s).is_err());
        assert!(Polynomial::parse("1/0*z", s).is_err());
        assert!(Polynomial::parse("x1 y", s).is_err());
    }

    fn arb_poly() -> impl Strategy<Value = Polynomial> {
        let s = sig(2, true);
        prop::collection::vec(
            (prop::collection::vec(0u32..4, 5), -20i64..20, 1i64..7, prop::bool::weighted(0.1)),
            0..8,
        )
        .prop_map(move |terms| {
            Polynomial::from_terms(
                s,
                terms.into_iter().map(|(e, n, d, quad)| {
                    let c = if quad {
                        FieldElement::quad(
                            Rational::new(n.into(), d.into()),
                            Rational::new(1.into(), d.into()),
                            &Rational::from_integer(3.into()),
                        )
                    } else {
                        FieldElement::from_ratio(n, d)
                    };
                    (Monomial::from_exponents(&e), c)
                }),
            )
        })
    }

    proptest! {
        #[test]
        fn print_parse_roundtrip(p in arb_poly()) {
            let text = p.to_string();
            let back = Polynomial::parse(&text, p.signature()).unwrap();
            prop_assert_eq!(back.to_string(), text);
            prop_assert_eq!(back, p);
        }
    }
}
