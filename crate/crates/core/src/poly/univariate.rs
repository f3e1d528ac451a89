//! Dense univariate polynomials in a formal variable `t`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{PolyError, Polynomial};
use crate::field::{FieldElement, FieldError};

/// Coefficients indexed by degree; the leading one is nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct UnivariatePoly {
    coeffs: Vec<FieldElement>,
}

impl UnivariatePoly {
    pub fn new(mut coeffs: Vec<FieldElement>) -> Self {
        while coeffs.last().is_some_and(FieldElement::is_zero) {
            coeffs.pop();
        }
        UnivariatePoly { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        UnivariatePoly::new(coeffs.iter().map(|&c| FieldElement::from_int(c)).collect())
    }

    pub fn zero() -> Self {
        UnivariatePoly { coeffs: Vec::new() }
    }

    pub fn constant(c: FieldElement) -> Self {
        UnivariatePoly::new(vec![c])
    }

    /// `t - a`
    pub fn t_minus(a: FieldElement) -> Self {
        UnivariatePoly::new(vec![-a, FieldElement::one()])
    }

    pub fn coefficients(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> FieldElement {
        self.coeffs.get(i).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading_coefficient(&self) -> Option<&FieldElement> {
        self.coeffs.last()
    }

    /// Degrees with nonzero coefficients, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn eval(&self, t: &FieldElement) -> FieldElement {
        self.coeffs
            .iter()
            .rev()
            .fold(FieldElement::zero(), |acc, c| acc * t + c)
    }

    pub fn scale(&self, c: &FieldElement) -> Self {
        UnivariatePoly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(UnivariatePoly::constant(FieldElement::one()), |acc, _| &acc * self)
    }

    pub fn derivative(&self) -> Self {
        UnivariatePoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * FieldElement::from_int(i as i64))
                .collect(),
        )
    }

    /// `q(mu * t)`.
    pub fn scale_argument(&self, mu: &FieldElement) -> Self {
        let mut power = FieldElement::one();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            out.push(c * &power);
            power = &power * mu;
        }
        UnivariatePoly::new(out)
    }

    /// The quotient `g` with `q(t) - q(c) = g(t) * (t - c)`, by synthetic
    /// division.
    pub fn difference_quotient(&self, c: &FieldElement) -> Self {
        let d = match self.degree() {
            Some(d) if d >= 1 => d,
            _ => return UnivariatePoly::zero(),
        };
        let mut g = vec![FieldElement::zero(); d];
        g[d - 1] = self.coeffs[d].clone();
        for i in (1..d).rev() {
            g[i - 1] = &self.coeffs[i] + c * &g[i];
        }
        UnivariatePoly::new(g)
    }

    /// The polynomial `r` with `q(t) - q(0) = 2t * r(t)`.
    pub fn half_t_quotient(&self) -> Self {
        let half = FieldElement::from_ratio(1, 2);
        UnivariatePoly::new(self.coeffs.iter().skip(1).map(|c| c * &half).collect())
    }

    /// `q(p)` for a multivariate `p`, by Horner's rule.
    pub fn eval_poly(&self, p: &Polynomial) -> Result<Polynomial, PolyError> {
        let sig = p.signature();
        let mut acc = Polynomial::zero(sig);
        for c in self.coeffs.iter().rev() {
            acc = acc.try_mul(p)?.try_add(&Polynomial::constant(sig, c.clone()))?;
        }
        Ok(acc)
    }

    pub fn checked_div_scalar(&self, c: &FieldElement) -> Result<Self, FieldError> {
        let inv = c.checked_inv()?;
        Ok(self.scale(&inv))
    }
}

impl Add<&UnivariatePoly> for &UnivariatePoly {
    type Output = UnivariatePoly;
    fn add(self, rhs: &UnivariatePoly) -> UnivariatePoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        UnivariatePoly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub<&UnivariatePoly> for &UnivariatePoly {
    type Output = UnivariatePoly;
    fn sub(self, rhs: &UnivariatePoly) -> UnivariatePoly {
        self + &(-rhs)
    }
}

impl Neg for &UnivariatePoly {
    type Output = UnivariatePoly;
    fn neg(self) -> UnivariatePoly {
        UnivariatePoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul<&UnivariatePoly> for &UnivariatePoly {
    type Output = UnivariatePoly;
    fn mul(self, rhs: &UnivariatePoly) -> UnivariatePoly {
        if self.is_zero() || rhs.is_zero() {
            return UnivariatePoly::zero();
        }
        let mut out = vec![FieldElement::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j].add_assign_ref(&(a * b));
            }
        }
        UnivariatePoly::new(out)
    }
}

impl fmt::Display for UnivariatePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let unit = c.is_one() && i > 0;
            let coeff = match c {
                FieldElement::Quad(_) => format!("({})", c),
                _ => c.to_string(),
            };
            match i {
                0 => write!(f, "{}", coeff)?,
                _ if unit => {}
                _ => write!(f, "{}*", coeff)?,
            }
            match i {
                0 => {}
                1 => write!(f, "t")?,
                _ => write!(f, "t^{}", i)?,
            }
        }
        Ok(())
    }
}

/// Comma-separated coefficient list, constant term first: `-1,1` is `t - 1`.
impl FromStr for UnivariatePoly {
    type Err = FieldError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(UnivariatePoly::zero());
        }
        let mut coeffs = Vec::new();
        let mut offset = 0;
        for part in s.split(',') {
            coeffs.push(crate::field::parse_field_element(part, offset)?);
            offset += part.len() + 1;
        }
        Ok(UnivariatePoly::new(coeffs))
    }
}

impl Serialize for UnivariatePoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coeffs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for UnivariatePoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(UnivariatePoly::new(Vec::<FieldElement>::deserialize(d)?))
    }
}
