//! Power series in the x-variables with polynomial coefficients in `y, z`,
//! truncated by total x-degree.

use std::fmt;

use thiserror::Error;

use crate::certificate::{summarize_residual, Basis, Certificate};
use crate::field::FieldElement;
use crate::poly::{PolyError, Polynomial, RingSignature, Var};

pub const DEFAULT_ORDER: u32 = 8;

const SERIES_ANCHOR: &str = "analytic automorphism relating P_1 - 1 and P_0 - 1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("argument has nonzero constant term {0}")]
    NonzeroConstantTerm(FieldElement),
    #[error("argument has a term of x-degree 0: {0}")]
    NotInXIdeal(String),
    #[error("signature mismatch: {0} vs {1}")]
    SignatureMismatch(RingSignature, RingSignature),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// A polynomial whose terms of total x-degree above `order` have been dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedSeries {
    order: u32,
    terms: Polynomial,
}

fn truncate(p: &Polynomial, order: u32) -> Polynomial {
    Polynomial::from_terms(
        p.signature(),
        p.terms()
            .filter(|(m, _)| p.x_degree_of(m) <= order)
            .map(|(m, c)| (m.clone(), c.clone())),
    )
}

impl TruncatedSeries {
    pub fn new(p: &Polynomial, order: u32) -> Self {
        TruncatedSeries { order, terms: truncate(p, order) }
    }

    pub fn zero(sig: RingSignature, order: u32) -> Self {
        TruncatedSeries { order, terms: Polynomial::zero(sig) }
    }

    pub fn one(sig: RingSignature, order: u32) -> Self {
        TruncatedSeries { order, terms: Polynomial::one(sig) }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn signature(&self) -> RingSignature {
        self.terms.signature()
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_zero()
    }

    /// The same series at a lower order.
    pub fn truncated(&self, order: u32) -> Self {
        TruncatedSeries::new(&self.terms, order.min(self.order))
    }

    /// Smallest x-degree carrying a nonzero term.
    pub fn valuation(&self) -> Option<u32> {
        self.terms.min_x_degree()
    }

    /// The terms of x-degree exactly `d`.
    pub fn homogeneous_part(&self, d: u32) -> Polynomial {
        Polynomial::from_terms(
            self.signature(),
            self.terms
                .terms()
                .filter(|(m, _)| self.terms.x_degree_of(m) == d)
                .map(|(m, c)| (m.clone(), c.clone())),
        )
    }

    fn common_order(&self, other: &Self) -> Result<u32, SeriesError> {
        if self.signature() != other.signature() {
            return Err(SeriesError::SignatureMismatch(self.signature(), other.signature()));
        }
        Ok(self.order.min(other.order))
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        let order = self.common_order(other)?;
        Ok(TruncatedSeries::new(&self.terms.try_add(&other.terms)?, order))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        let order = self.common_order(other)?;
        Ok(TruncatedSeries::new(&self.terms.try_sub(&other.terms)?, order))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        let order = self.common_order(other)?;
        let sig = self.signature();
        let mut out = Polynomial::zero(sig);
        for d in 0..=order {
            let a = self.homogeneous_part(d);
            if a.is_zero() {
                continue;
            }
            let b = truncate(&other.terms, order - d);
            out = out.try_add(&a.try_mul(&b)?)?;
        }
        Ok(TruncatedSeries { order, terms: out })
    }

    pub fn scale(&self, c: &FieldElement) -> Self {
        TruncatedSeries { order: self.order, terms: self.terms.scale(c) }
    }

    pub fn mul_poly(&self, p: &Polynomial) -> Result<Self, SeriesError> {
        self.mul(&TruncatedSeries::new(p, self.order))
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + O(x^{})", self.terms, self.order + 1)
    }
}

fn check_argument(u: &Polynomial) -> Result<(), SeriesError> {
    let c = u.constant_term();
    if !c.is_zero() {
        return Err(SeriesError::NonzeroConstantTerm(c));
    }
    if u.min_x_degree() == Some(0) {
        return Err(SeriesError::NotInXIdeal(u.to_string()));
    }
    Ok(())
}

/// `sum_j u^j / j!` through x-degree `order`.
pub fn exp_series(u: &Polynomial, order: u32) -> Result<TruncatedSeries, SeriesError> {
    check_argument(u)?;
    let sig = u.signature();
    let arg = TruncatedSeries::new(u, order);
    let mut sum = TruncatedSeries::one(sig, order);
    let mut power = TruncatedSeries::one(sig, order);
    let mut j = 1i64;
    loop {
        power = power.mul(&arg)?.scale(&FieldElement::from_ratio(1, j));
        if power.is_zero() {
            return Ok(sum);
        }
        sum = sum.add(&power)?;
        j += 1;
    }
}

/// `(exp(-u) - 1 + u) / u^2 = sum_(j >= 2) (-1)^j u^(j-2) / j!` through
/// x-degree `order`.
pub fn second_tail_series(u: &Polynomial, order: u32) -> Result<TruncatedSeries, SeriesError> {
    check_argument(u)?;
    let sig = u.signature();
    let arg = TruncatedSeries::new(u, order);
    let mut power = TruncatedSeries::one(sig, order);
    let mut factorial = 2i64;
    let mut sum = TruncatedSeries::zero(sig, order);
    let mut j = 2i64;
    loop {
        let sign = if j % 2 == 0 { 1 } else { -1 };
        sum = sum.add(&power.scale(&FieldElement::from_ratio(sign, factorial)))?;
        j += 1;
        factorial *= j;
        power = power.mul(&arg)?;
        if power.is_zero() {
            return Ok(sum);
        }
    }
}

/// A map fixing the x-variables and sending `y`, `z` to truncated series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesMap {
    pub y: TruncatedSeries,
    pub z: TruncatedSeries,
}

impl SeriesMap {
    pub fn order(&self) -> u32 {
        self.y.order().min(self.z.order())
    }

    /// Image of a polynomial (or of a truncated series' polynomial part).
    pub fn apply(&self, p: &Polynomial) -> Result<TruncatedSeries, SeriesError> {
        let sig = p.signature();
        if sig != self.y.signature() {
            return Err(SeriesError::SignatureMismatch(sig, self.y.signature()));
        }
        let order = self.order();
        let yi = sig.index(Var::Y).expect("y");
        let zi = sig.index(Var::Z).expect("z");
        let mut y_pows = vec![TruncatedSeries::one(sig, order)];
        let mut z_pows = vec![TruncatedSeries::one(sig, order)];
        let mut out = TruncatedSeries::zero(sig, order);
        for (m, c) in p.terms() {
            let e = m.exponents();
            while y_pows.len() <= e[yi] as usize {
                let next = y_pows.last().expect("nonempty").mul(&self.y)?;
                y_pows.push(next);
            }
            while z_pows.len() <= e[zi] as usize {
                let next = z_pows.last().expect("nonempty").mul(&self.z)?;
                z_pows.push(next);
            }
            let mut xe = e.to_vec();
            xe[yi] = 0;
            xe[zi] = 0;
            let x_part = Polynomial::term(sig, crate::poly::Monomial::from_exponents(&xe), c.clone());
            let t = y_pows[e[yi] as usize]
                .mul(&z_pows[e[zi] as usize])?
                .mul_poly(&x_part)?;
            out = out.add(&t)?;
        }
        Ok(out)
    }

    /// `self` after `inner`, i.e. `g -> self(inner(g))`.
    pub fn compose(&self, inner: &SeriesMap) -> Result<SeriesMap, SeriesError> {
        Ok(SeriesMap {
            y: self.apply(inner.y.polynomial())?,
            z: self.apply(inner.z.polynomial())?,
        })
    }

    pub fn truncated(&self, order: u32) -> SeriesMap {
        SeriesMap { y: self.y.truncated(order), z: self.z.truncated(order) }
    }
}

fn signature(n: usize) -> Result<RingSignature, SeriesError> {
    Ok(RingSignature::new(n, false)?)
}

/// `y -> exp(-u) y - (exp(-u) - 1 + u)/u^2`, `z -> exp(-u/2) z` with `u = x^[1]`.
pub fn biholomorphism(n: usize, order: u32) -> Result<SeriesMap, SeriesError> {
    let sig = signature(n)?;
    let u = Polynomial::x_power_bracket(sig, 1);
    let e = exp_series(&-&u, order)?;
    let half = exp_series(&u.scale(&FieldElement::from_ratio(-1, 2)), order)?;
    let tail = second_tail_series(&u, order)?;
    Ok(SeriesMap {
        y: e.mul_poly(&Polynomial::gen(sig, Var::Y))?.sub(&tail)?,
        z: half.mul_poly(&Polynomial::gen(sig, Var::Z))?,
    })
}

/// `y -> exp(u) y + exp(u) (exp(-u) - 1 + u)/u^2`, `z -> exp(u/2) z`.
pub fn biholomorphism_inverse(n: usize, order: u32) -> Result<SeriesMap, SeriesError> {
    let sig = signature(n)?;
    let u = Polynomial::x_power_bracket(sig, 1);
    let e = exp_series(&u, order)?;
    let half = exp_series(&u.scale(&FieldElement::from_ratio(1, 2)), order)?;
    let tail = second_tail_series(&u, order)?;
    Ok(SeriesMap {
        y: e.mul_poly(&Polynomial::gen(sig, Var::Y))?.add(&e.mul(&tail)?)?,
        z: half.mul_poly(&Polynomial::gen(sig, Var::Z))?,
    })
}

fn record(cert: &mut Certificate, name: String, residual: Result<TruncatedSeries, SeriesError>) {
    let (pass, detail) = match residual {
        Ok(r) => match r.valuation() {
            None => (true, None),
            Some(d) => (
                false,
                Some(format!(
                    "first nonzero x-degree {}: {}",
                    d,
                    summarize_residual(&r.homogeneous_part(d))
                )),
            ),
        },
        Err(e) => (false, Some(format!("error: {}", e))),
    };
    cert.check(name, SERIES_ANCHOR, Basis::Exact, pass, detail);
}

/// `Psi(x^[2]y + z^2 + x^[1] - 1) - exp(-x^[1]) (x^[2]y + z^2 - 1)` through
/// the order of `psi`.
pub fn identity_residual(psi: &SeriesMap, n: usize) -> Result<TruncatedSeries, SeriesError> {
    let sig = signature(n)?;
    let order = psi.order();
    let u = Polynomial::x_power_bracket(sig, 1);
    let base = Polynomial::x_power_bracket(sig, 2)
        .try_mul(&Polynomial::gen(sig, Var::Y))?
        .try_add(&Polynomial::gen(sig, Var::Z).pow(2))?
        .try_sub(&Polynomial::one(sig))?;
    let lhs = psi.apply(&base.try_add(&u)?)?;
    let rhs = exp_series(&-&u, order)?.mul_poly(&base)?;
    lhs.sub(&rhs)
}

/// Checks a candidate map against the identity and against the inverse
/// series.
pub fn check_biholomorphism(psi: &SeriesMap, n: usize) -> Certificate {
    let order = psi.order();
    let mut cert = Certificate::new(
        format!(
            "Psi(x^[2]y + z^2 + x^[1] - 1) = exp(-x^[1]) (x^[2]y + z^2 - 1) through x-degree {}, n = {}",
            order, n
        ),
        serde_json::json!({ "n": n, "order": order }),
    );
    record(
        &mut cert,
        format!("identity through x-degree {}", order),
        identity_residual(psi, n),
    );
    match biholomorphism_inverse(n, order) {
        Ok(inv) => {
            for (label, outer, inner) in [("Psi(Psi^-1", psi, &inv), ("Psi^-1(Psi", &inv, psi)] {
                let composed = outer.compose(inner);
                for v in [Var::Y, Var::Z] {
                    let residual = composed.clone().and_then(|c| {
                        let img = if v == Var::Y { c.y } else { c.z };
                        img.sub(&TruncatedSeries::new(&Polynomial::gen(img.signature(), v), order))
                    });
                    record(&mut cert, format!("{}({})) = {}", label, v, v), residual);
                }
            }
        }
        Err(e) => record(&mut cert, "inverse series".into(), Err(e)),
    }
    cert.note(format!(
        "the identity is certified modulo x-degree {}; convergence is not checked",
        order + 1
    ));
    cert
}

pub fn verify_biholomorphism(n: usize, order: u32) -> Certificate {
    match biholomorphism(n, order) {
        Ok(psi) => check_biholomorphism(&psi, n),
        Err(e) => {
            let mut cert = Certificate::new(
                format!("series identity, n = {}, order {}", n, order),
                serde_json::json!({ "n": n, "order": order }),
            );
            record(&mut cert, "build Psi".into(), Err(e));
            cert
        }
    }
}
