//! Exact scalars.
//!
//! Coefficients are big rationals, optionally living in one quadratic
//! extension `Q(sqrt d)`. The extension is carried by each irrational element;
//! rational elements are compatible with every extension. Mixing two
//! different extensions is an error (`MixedDiscriminant`).

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("elements of Q(sqrt({left})) and Q(sqrt({right})) cannot be mixed")]
    MixedDiscriminant { left: String, right: String },
    #[error("{value} has no square root in the field")]
    NotASquare { value: String },
    #[error("parse error at {position}: {message}")]
    Parse { position: usize, message: String },
}

/// Radicand of a quadratic extension, normalized to an integer that is not a
/// perfect square (square factors below 1000 are pulled out as well).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Discriminant(BigInt);

impl Discriminant {
    /// Builds the extension `Q(sqrt d)`. Returns `None` when `d` is a rational
    /// square, in which case no extension is needed.
    pub fn new(d: &Rational) -> Option<Discriminant> {
        let (_, rest) = split_square(d);
        if rest.is_one() || rest.is_zero() {
            None
        } else {
            Some(Discriminant(rest))
        }
    }

    pub fn value(&self) -> &BigInt {
        &self.0
    }

    fn as_rational(&self) -> Rational {
        Rational::from_integer(self.0.clone())
    }
}

impl fmt::Display for Discriminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Writes `d = s^2 * m` with `m` an integer free of small square factors and
/// not itself a perfect square (up to sign).
fn split_square(d: &Rational) -> (Rational, BigInt) {
    if d.is_zero() {
        return (Rational::zero(), BigInt::zero());
    }
    // d = p/q = (p*q) / q^2
    let mut scale = Rational::new(BigInt::one(), d.denom().clone());
    let mut m: BigInt = d.numer() * d.denom();
    let mut f = BigInt::from(2u32);
    let limit = BigInt::from(1000u32);
    while f <= limit && &f * &f <= m.abs() {
        let sq = &f * &f;
        while (&m % &sq).is_zero() {
            m /= &sq;
            scale *= Rational::from_integer(f.clone());
        }
        f += 1u32;
    }
    let abs = m.abs();
    let root = abs.sqrt();
    if &root * &root == abs {
        scale *= Rational::from_integer(root);
        m = if m.is_negative() { -BigInt::one() } else { BigInt::one() };
    }
    (scale, m)
}

/// Which square roots a computation may use.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum FieldContext {
    #[default]
    Rationals,
    Quadratic(Discriminant),
}

impl FieldContext {
    /// `Q(sqrt d)`, or plain `Q` when `d` is already a square.
    pub fn adjoin_sqrt(d: &Rational) -> FieldContext {
        match Discriminant::new(d) {
            Some(disc) => FieldContext::Quadratic(disc),
            None => FieldContext::Rationals,
        }
    }
}

/// `a + b*sqrt(d)` with `b != 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadExt {
    a: Rational,
    b: Rational,
    d: Discriminant,
}

impl QuadExt {
    pub fn rational_part(&self) -> &Rational {
        &self.a
    }

    pub fn irrational_part(&self) -> &Rational {
        &self.b
    }

    pub fn discriminant(&self) -> &Discriminant {
        &self.d
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldElement {
    Rational(Rational),
    Quad(QuadExt),
}

impl FieldElement {
    pub fn zero() -> Self {
        FieldElement::Rational(Rational::zero())
    }

    pub fn one() -> Self {
        FieldElement::Rational(Rational::one())
    }

    pub fn from_int(v: i64) -> Self {
        FieldElement::Rational(Rational::from_integer(BigInt::from(v)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        FieldElement::Rational(Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// `a + b*sqrt(d)`, normalized: square factors of `d` move into `b`, and a
    /// square `d` collapses to a rational.
    pub fn quad(a: Rational, b: Rational, d: &Rational) -> Self {
        let (scale, rest) = split_square(d);
        let b = b * scale;
        if rest.is_one() {
            return FieldElement::Rational(a + b);
        }
        if rest.is_zero() {
            return FieldElement::Rational(a);
        }
        Self::from_parts(a, b, Discriminant(rest))
    }

    /// The element `sqrt(d)` of the extension `disc`.
    pub fn sqrt_of(disc: &Discriminant) -> Self {
        FieldElement::Quad(QuadExt {
            a: Rational::zero(),
            b: Rational::one(),
            d: disc.clone(),
        })
    }

    fn from_parts(a: Rational, b: Rational, d: Discriminant) -> Self {
        if b.is_zero() {
            FieldElement::Rational(a)
        } else {
            FieldElement::Quad(QuadExt { a, b, d })
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, FieldElement::Rational(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, FieldElement::Rational(r) if r.is_one())
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            FieldElement::Rational(r) => Some(r),
            FieldElement::Quad(_) => None,
        }
    }

    pub fn discriminant(&self) -> Option<&Discriminant> {
        match self {
            FieldElement::Rational(_) => None,
            FieldElement::Quad(q) => Some(&q.d),
        }
    }

    fn common_disc<'a>(
        &'a self,
        other: &'a FieldElement,
    ) -> Result<Option<&'a Discriminant>, FieldError> {
        match (self.discriminant(), other.discriminant()) {
            (Some(l), Some(r)) if l != r => Err(FieldError::MixedDiscriminant {
                left: l.to_string(),
                right: r.to_string(),
            }),
            (Some(l), _) => Ok(Some(l)),
            (None, r) => Ok(r),
        }
    }

    fn split(&self) -> (&Rational, Option<&Rational>) {
        match self {
            FieldElement::Rational(r) => (r, None),
            FieldElement::Quad(q) => (&q.a, Some(&q.b)),
        }
    }

    pub fn checked_add(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        if let (FieldElement::Rational(a), FieldElement::Rational(b)) = (self, other) {
            return Ok(FieldElement::Rational(a + b));
        }
        let d = self.common_disc(other)?.cloned().expect("one side is irrational");
        let (a1, b1) = self.split();
        let (a2, b2) = other.split();
        let b = match (b1, b2) {
            (Some(x), Some(y)) => x + y,
            (Some(x), None) | (None, Some(x)) => x.clone(),
            (None, None) => unreachable!(),
        };
        Ok(Self::from_parts(a1 + a2, b, d))
    }

    pub fn checked_sub(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        self.checked_add(&-other)
    }

    pub fn checked_mul(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        if let (FieldElement::Rational(a), FieldElement::Rational(b)) = (self, other) {
            return Ok(FieldElement::Rational(a * b));
        }
        let d = self.common_disc(other)?.cloned().expect("one side is irrational");
        let (a1, b1) = self.split();
        let (a2, b2) = other.split();
        let (a, b) = match (b1, b2) {
            (Some(x), Some(y)) => (a1 * a2 + x * y * d.as_rational(), a1 * y + a2 * x),
            (Some(x), None) => (a1 * a2, x * a2),
            (None, Some(y)) => (a1 * a2, a1 * y),
            (None, None) => unreachable!(),
        };
        Ok(Self::from_parts(a, b, d))
    }

    pub fn checked_inv(&self) -> Result<FieldElement, FieldError> {
        match self {
            FieldElement::Rational(r) => {
                if r.is_zero() {
                    Err(FieldError::DivisionByZero)
                } else {
                    Ok(FieldElement::Rational(r.recip()))
                }
            }
            FieldElement::Quad(q) => {
                // (a - b sqrt d) / (a^2 - d b^2); the norm is nonzero since d is no square.
                let norm = &q.a * &q.a - &q.b * &q.b * q.d.as_rational();
                Ok(Self::from_parts(
                    &q.a / &norm,
                    -(&q.b / &norm),
                    q.d.clone(),
                ))
            }
        }
    }

    pub fn checked_div(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        self.checked_mul(&other.checked_inv()?)
    }

    /// In-place `self += other`, avoiding a clone on the rational path.
    pub(crate) fn add_assign_ref(&mut self, other: &FieldElement) {
        if let (FieldElement::Rational(a), FieldElement::Rational(b)) = (&mut *self, other) {
            *a += b;
            return;
        }
        *self = &*self + other;
    }

    /// Integer power; negative exponents invert first.
    pub fn pow(&self, exp: i64) -> Result<FieldElement, FieldError> {
        let base = if exp < 0 { self.checked_inv()? } else { self.clone() };
        let mut e = exp.unsigned_abs();
        let mut acc = FieldElement::one();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.checked_mul(&sq)?;
            }
            e >>= 1;
            if e > 0 {
                sq = sq.checked_mul(&sq)?;
            }
        }
        Ok(acc)
    }

    /// Double-precision value, for diagnostics only. `None` for imaginary
    /// elements.
    pub fn to_f64(&self) -> Option<f64> {
        match self {
            FieldElement::Rational(r) => r.to_f64(),
            FieldElement::Quad(q) => {
                let d = q.d.0.to_f64()?;
                if d < 0.0 {
                    return None;
                }
                Some(q.a.to_f64()? + q.b.to_f64()? * d.sqrt())
            }
        }
    }
}

impl Default for FieldElement {
    fn default() -> Self {
        FieldElement::zero()
    }
}

impl From<Rational> for FieldElement {
    fn from(r: Rational) -> Self {
        FieldElement::Rational(r)
    }
}

impl From<i64> for FieldElement {
    fn from(v: i64) -> Self {
        FieldElement::from_int(v)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&FieldElement> for &FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                match self.$checked(rhs) {
                    Ok(v) => v,
                    Err(e) => panic!("{}", e),
                }
            }
        }
        impl $tr<FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: FieldElement) -> FieldElement {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                (&self).$method(rhs)
            }
        }
        impl $tr<FieldElement> for &FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: FieldElement) -> FieldElement {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);
forward_binop!(Div, div, checked_div);

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        match self {
            FieldElement::Rational(r) => FieldElement::Rational(-r),
            FieldElement::Quad(q) => FieldElement::Quad(QuadExt {
                a: -&q.a,
                b: -&q.b,
                d: q.d.clone(),
            }),
        }
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}

impl Zero for FieldElement {
    fn zero() -> Self {
        FieldElement::zero()
    }
    fn is_zero(&self) -> bool {
        FieldElement::is_zero(self)
    }
}

impl One for FieldElement {
    fn one() -> Self {
        FieldElement::one()
    }
}

/// Square root of a non-negative rational, if it is rational.
pub fn rational_sqrt(r: &Rational) -> Option<Rational> {
    rational_nth_root(r, 2)
}

/// Real `n`-th root of a rational, if it is rational. For even `n` the
/// non-negative root is returned.
pub fn rational_nth_root(r: &Rational, n: u32) -> Option<Rational> {
    if n == 0 {
        return None;
    }
    if r.is_negative() && n % 2 == 0 {
        return None;
    }
    let num = r.numer().abs();
    let den = r.denom().clone();
    let rn = num.nth_root(n);
    let rd = den.nth_root(n);
    if num_traits::pow(rn.clone(), n as usize) != num || num_traits::pow(rd.clone(), n as usize) != den {
        return None;
    }
    let root = Rational::new(rn, rd);
    Some(if r.is_negative() { -root } else { root })
}

/// A square root of `a` inside the field described by `ctx` (or inside the
/// element's own extension). Rational roots are preferred; the returned root
/// is the one with non-negative leading part.
pub fn sqrt_in_field(a: &FieldElement, ctx: &FieldContext) -> Result<FieldElement, FieldError> {
    let not_square = || FieldError::NotASquare {
        value: a.to_string(),
    };
    match a {
        FieldElement::Rational(r) => {
            if let Some(root) = rational_sqrt(r) {
                return Ok(FieldElement::Rational(root));
            }
            if let FieldContext::Quadratic(d) = ctx {
                // sqrt(r) = s * sqrt(d) with s^2 = r / d
                if let Some(s) = rational_sqrt(&(r / d.as_rational())) {
                    return Ok(FieldElement::from_parts(Rational::zero(), s, d.clone()));
                }
            }
            Err(not_square())
        }
        FieldElement::Quad(q) => {
            if let FieldContext::Quadratic(d) = ctx {
                if d != &q.d {
                    return Err(FieldError::MixedDiscriminant {
                        left: d.to_string(),
                        right: q.d.to_string(),
                    });
                }
            }
            // (x + y sqrt d)^2 = a + b sqrt d  <=>  x^2 + d y^2 = a, 2xy = b.
            // Then x^2 - d y^2 = +-sqrt(a^2 - d b^2).
            let dr = q.d.as_rational();
            let norm = &q.a * &q.a - &q.b * &q.b * &dr;
            let s = rational_sqrt(&norm).ok_or_else(not_square)?;
            let two = Rational::from_integer(BigInt::from(2));
            for cand in [(&q.a + &s) / &two, (&q.a - &s) / &two] {
                if cand.is_zero() {
                    continue;
                }
                if let Some(x) = rational_sqrt(&cand) {
                    let y = &q.b / (&two * &x);
                    return Ok(FieldElement::from_parts(x, y, q.d.clone()));
                }
            }
            Err(not_square())
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldElement::Rational(r) => write!(f, "{}", r),
            FieldElement::Quad(q) => {
                let has_a = !q.a.is_zero();
                if has_a {
                    write!(f, "{}", q.a)?;
                }
                let neg = q.b.is_negative();
                let mag = q.b.abs();
                if neg {
                    write!(f, "-")?;
                } else if has_a {
                    write!(f, "+")?;
                }
                if mag.is_one() {
                    write!(f, "sqrt({})", q.d)
                } else {
                    write!(f, "{}*sqrt({})", mag, q.d)
                }
            }
        }
    }
}

struct Scanner<'a> {
    src: &'a [u8],
    pos: usize,
    offset: usize,
}

impl<'a> Scanner<'a> {
    fn err(&self, message: impl Into<String>) -> FieldError {
        FieldError::Parse {
            position: self.offset + self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn integer(&mut self) -> Result<BigInt, FieldError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected digits"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(text.parse().expect("digits parse"))
    }

    /// Unsigned `p` or `p/q`.
    fn rational(&mut self) -> Result<Rational, FieldError> {
        let num = self.integer()?;
        if self.eat(b'/') {
            let den = self.integer()?;
            if den.is_zero() {
                return Err(self.err("zero denominator"));
            }
            Ok(Rational::new(num, den))
        } else {
            Ok(Rational::from_integer(num))
        }
    }

    fn signed_rational(&mut self) -> Result<Rational, FieldError> {
        let neg = self.eat(b'-');
        if !neg {
            self.eat(b'+');
        }
        let r = self.rational()?;
        Ok(if neg { -r } else { r })
    }

    fn keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(kw.as_bytes()) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn sqrt_call(&mut self) -> Result<Rational, FieldError> {
        if !self.eat(b'(') {
            return Err(self.err("expected '(' after sqrt"));
        }
        let d = self.signed_rational()?;
        if !self.eat(b')') {
            return Err(self.err("expected ')'"));
        }
        Ok(d)
    }

    /// `term := rational ['*' sqrt(d)] | sqrt(d)`; returns (value, radicand).
    fn term(&mut self) -> Result<(Rational, Option<Rational>), FieldError> {
        if self.keyword("sqrt") {
            return Ok((Rational::one(), Some(self.sqrt_call()?)));
        }
        let r = self.rational()?;
        if self.eat(b'*') {
            if !self.keyword("sqrt") {
                return Err(self.err("expected sqrt after '*'"));
            }
            return Ok((r, Some(self.sqrt_call()?)));
        }
        Ok((r, None))
    }
}

/// Parses `p`, `p/q`, `a+b*sqrt(d)` and the like. `offset` shifts reported
/// error positions (used when embedded in polynomial text).
pub(crate) fn parse_field_element(text: &str, offset: usize) -> Result<FieldElement, FieldError> {
    let mut sc = Scanner {
        src: text.as_bytes(),
        pos: 0,
        offset,
    };
    let mut rational = Rational::zero();
    let mut irrational: Option<(Rational, Rational)> = None;
    let mut first = true;
    loop {
        let neg = match sc.peek() {
            None if first => return Err(sc.err("empty field element")),
            None => break,
            Some(b'-') => {
                sc.pos += 1;
                true
            }
            Some(b'+') => {
                sc.pos += 1;
                false
            }
            Some(_) if first => false,
            Some(c) => return Err(sc.err(format!("unexpected '{}'", c as char))),
        };
        first = false;
        let (mut v, radicand) = sc.term()?;
        if neg {
            v = -v;
        }
        match radicand {
            None => rational += v,
            Some(d) => match &mut irrational {
                None => irrational = Some((v, d)),
                Some((b, d0)) if *d0 == d => *b += v,
                Some(_) => return Err(sc.err("at most one square root is supported")),
            },
        }
    }
    Ok(match irrational {
        None => FieldElement::Rational(rational),
        Some((b, d)) => FieldElement::quad(rational, b, &d),
    })
}

impl FromStr for FieldElement {
    type Err = FieldError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_field_element(s, 0)
    }
}

impl Serialize for FieldElement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for FieldElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(FieldElement::from_int(v)),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Exact comparison with zero for rationals; irrational elements are never
/// ordered.
pub fn rational_sign(r: &Rational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_negative() {
        -1
    } else {
        1
    }
}
