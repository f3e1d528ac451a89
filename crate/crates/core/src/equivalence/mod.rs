//! Equivalence of the polynomials `P_q - c` and of their zero sets, with
//! witness automorphisms.

mod stable;
mod theorem;

pub use stable::{build_stable_equivalence, verify_stable_equivalence, StableEquivPair};
pub use theorem::{default_c_samples, theorem_certificate, TheoremOptions};

use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{rational_nth_root, sqrt_in_field, FieldContext, FieldElement};
use crate::morphisms::RingEndomorphism;
use crate::poly::{PolyError, Polynomial, RingSignature, UnivariatePoly, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivalenceError {
    #[error("invalid witness: {reason}")]
    InvalidWitness { reason: String },
    #[error("precondition violated: {reason}")]
    Precondition { reason: String },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// `q2 = lambda * q1` and `c1 = c2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyEquivWitness {
    pub lambda: FieldElement,
}

/// `q2(t) = lambda * q1(mu * t)`, `c2 = c1 / mu` and `epsilon^2 = 1 / mu`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperEquivWitness {
    pub lambda: FieldElement,
    pub mu: FieldElement,
    pub epsilon: FieldElement,
}

impl HyperEquivWitness {
    pub fn new(
        lambda: FieldElement,
        mu: FieldElement,
        epsilon: FieldElement,
    ) -> Result<Self, EquivalenceError> {
        let invalid = |reason: &str| EquivalenceError::InvalidWitness {
            reason: reason.to_string(),
        };
        if lambda.is_zero() || mu.is_zero() {
            return Err(invalid("lambda and mu must be nonzero"));
        }
        let prod = epsilon
            .checked_mul(&epsilon)
            .and_then(|e2| e2.checked_mul(&mu))
            .map_err(|e| invalid(&e.to_string()))?;
        if !prod.is_one() {
            return Err(invalid("epsilon^2 must equal 1/mu"));
        }
        Ok(HyperEquivWitness { lambda, mu, epsilon })
    }

    /// Picks `epsilon` as a square root of `1/mu` in the given field.
    pub fn from_lambda_mu(
        lambda: FieldElement,
        mu: FieldElement,
        ctx: &FieldContext,
    ) -> Result<Self, EquivalenceError> {
        let inv = mu.checked_inv().map_err(|e| EquivalenceError::InvalidWitness {
            reason: e.to_string(),
        })?;
        let epsilon = sqrt_in_field(&inv, ctx).map_err(|e| EquivalenceError::InvalidWitness {
            reason: format!("no square root of 1/mu = {} in the field ({})", inv, e),
        })?;
        HyperEquivWitness::new(lambda, mu, epsilon)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum PolyEquivVerdict {
    Equivalent(PolyEquivWitness),
    NotEquivalent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum HyperEquivVerdict {
    Equivalent(HyperEquivWitness),
    NotEquivalent,
    /// Over the complex numbers the answer is "equivalent", but the
    /// witness needs a root outside the working field.
    NotDecidableInField {
        relation: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<FieldElement>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu: Option<FieldElement>,
    },
}

impl fmt::Display for PolyEquivVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolyEquivVerdict::Equivalent(w) => write!(f, "Equivalent(lambda={})", w.lambda),
            PolyEquivVerdict::NotEquivalent => write!(f, "NotEquivalent"),
        }
    }
}

impl fmt::Display for HyperEquivVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperEquivVerdict::Equivalent(w) => write!(
                f,
                "Equivalent(lambda={}, mu={}, epsilon={})",
                w.lambda, w.mu, w.epsilon
            ),
            HyperEquivVerdict::NotEquivalent => write!(f, "NotEquivalent"),
            HyperEquivVerdict::NotDecidableInField { relation, .. } => {
                write!(f, "NotDecidableInField({})", relation)
            }
        }
    }
}

/// The `lambda` with `q2 = lambda * q1`, if any. Both zero gives 1.
fn proportionality(q1: &UnivariatePoly, q2: &UnivariatePoly) -> Option<FieldElement> {
    if q1.support() != q2.support() {
        return None;
    }
    let lambda = match q1.support().first() {
        None => return Some(FieldElement::one()),
        Some(&j) => &q2.coeff(j) / &q1.coeff(j),
    };
    (q1.scale(&lambda) == *q2).then_some(lambda)
}

pub fn decide_poly_equivalence(
    q1: &UnivariatePoly,
    c1: &FieldElement,
    q2: &UnivariatePoly,
    c2: &FieldElement,
) -> PolyEquivVerdict {
    if c1 != c2 {
        return PolyEquivVerdict::NotEquivalent;
    }
    match proportionality(q1, q2) {
        Some(lambda) => PolyEquivVerdict::Equivalent(PolyEquivWitness { lambda }),
        None => PolyEquivVerdict::NotEquivalent,
    }
}

/// Diagonal automorphism `x1 -> a*x1, y -> b*y, z -> e*z` fixing the other
/// generators of `sig`.
fn diagonal(
    sig: RingSignature,
    a: &FieldElement,
    b: &FieldElement,
    e: &FieldElement,
) -> RingEndomorphism {
    let scaled = |v: Var, k: &FieldElement| (v, Polynomial::gen(sig, v).scale(k));
    RingEndomorphism::from_images(
        sig,
        &[scaled(Var::X(1), a), scaled(Var::Y, b), scaled(Var::Z, e)],
    )
    .expect("generators of sig")
}

/// `x1 -> lambda*x1`, `y -> y/lambda^2`; sends `P_q` to `P_(lambda*q)` in any
/// signature (the cylinder variable `w` is fixed).
pub fn poly_equiv_automorphism_in(
    sig: RingSignature,
    lambda: &FieldElement,
) -> Result<RingEndomorphism, EquivalenceError> {
    let inv2 = lambda
        .pow(-2)
        .map_err(|_| EquivalenceError::InvalidWitness {
            reason: "lambda must be nonzero".into(),
        })?;
    Ok(diagonal(sig, lambda, &inv2, &FieldElement::one()))
}

pub fn build_poly_equiv_automorphism(
    witness: &PolyEquivWitness,
    n: usize,
) -> Result<RingEndomorphism, EquivalenceError> {
    poly_equiv_automorphism_in(RingSignature::new(n, false)?, &witness.lambda)
}

/// The map `x1 -> x1/(lambda*mu), y -> mu*lambda^2*y, z -> epsilon*z`: the
/// scaling `(x1, y, z) -> (x1/mu, mu*y, epsilon*z)` combined with the
/// polynomial-equivalence map for `1/lambda`.
///
/// It sends `P_(q2) - c2` to `(1/mu)*(P_(q1) - c1)`, so the corresponding map
/// of points carries `V(P_(q1) - c1)` onto `V(P_(q2) - c2)`.
pub fn build_hyper_equiv_automorphism(
    witness: &HyperEquivWitness,
    n: usize,
) -> Result<RingEndomorphism, EquivalenceError> {
    let w = HyperEquivWitness::new(
        witness.lambda.clone(),
        witness.mu.clone(),
        witness.epsilon.clone(),
    )?;
    let sig = RingSignature::new(n, false)?;
    let a = (&w.lambda * &w.mu).checked_inv().expect("nonzero");
    let b = &w.mu * &(&w.lambda * &w.lambda);
    Ok(diagonal(sig, &a, &b, &w.epsilon))
}

/// Inverse of [`build_hyper_equiv_automorphism`].
pub fn build_hyper_equiv_inverse(
    witness: &HyperEquivWitness,
    n: usize,
) -> Result<RingEndomorphism, EquivalenceError> {
    let w = HyperEquivWitness::new(
        witness.lambda.clone(),
        witness.mu.clone(),
        witness.epsilon.clone(),
    )?;
    let sig = RingSignature::new(n, false)?;
    let a = &w.lambda * &w.mu;
    let b = (&w.mu * &(&w.lambda * &w.lambda)).checked_inv().expect("nonzero");
    let e = w.epsilon.checked_inv().expect("nonzero");
    Ok(diagonal(sig, &a, &b, &e))
}

/// All `mu` in the working field with `mu^g = rho` that are reachable by
/// square roots followed by one rational odd root.
fn roots_in_field(rho: &FieldElement, g: u32, ctx: &FieldContext) -> Vec<FieldElement> {
    let twos = g.trailing_zeros();
    let odd = g >> twos;
    let mut layer = vec![rho.clone()];
    for _ in 0..twos {
        let mut next = Vec::new();
        for e in &layer {
            if let Ok(s) = sqrt_in_field(e, ctx) {
                if s.is_zero() {
                    next.push(s);
                } else {
                    next.push(s.clone());
                    next.push(-s);
                }
            }
        }
        layer = next;
    }
    let mut out: Vec<FieldElement> = layer
        .into_iter()
        .filter_map(|e| match (odd, e.as_rational()) {
            (1, _) => Some(e),
            (_, Some(r)) => rational_nth_root(r, odd).map(FieldElement::from),
            _ => None,
        })
        .filter(|m| m.pow(i64::from(g)).ok().as_ref() == Some(rho))
        .collect();
    // rational roots first, positive before negative
    out.sort_by_key(|m| {
        (
            m.as_rational().is_none(),
            m.to_f64().map(|x| x < 0.0).unwrap_or(false),
        )
    });
    out.dedup();
    out
}

/// Returns `lambda` if `q2(t) = lambda * q1(mu t)` holds.
fn lambda_for_mu(
    q1: &UnivariatePoly,
    q2: &UnivariatePoly,
    mu: &FieldElement,
) -> Option<FieldElement> {
    proportionality(&q1.scale_argument(mu), q2)
}

fn witness_or_undecidable(
    lambda: FieldElement,
    mu: FieldElement,
    ctx: &FieldContext,
) -> Result<HyperEquivWitness, HyperEquivVerdict> {
    HyperEquivWitness::from_lambda_mu(lambda.clone(), mu.clone(), ctx).map_err(|_| {
        HyperEquivVerdict::NotDecidableInField {
            relation: format!("epsilon^2 = 1/({})", mu),
            lambda: Some(lambda),
            mu: Some(mu),
        }
    })
}

/// Decides whether `V(P_(q1) - c1)` and `V(P_(q2) - c2)` are equivalent, i.e.
/// whether nonzero `lambda, mu` exist with `c2 = c1/mu` and
/// `q2(t) = lambda*q1(mu*t)`.
///
/// `NotEquivalent` answers are exact over the complex numbers. A positive
/// answer whose `mu` or `epsilon` is not in the working field is reported as
/// `NotDecidableInField` with the unmet relation.
pub fn decide_hypersurface_equivalence(
    q1: &UnivariatePoly,
    c1: &FieldElement,
    q2: &UnivariatePoly,
    c2: &FieldElement,
    ctx: &FieldContext,
) -> HyperEquivVerdict {
    if c1.is_zero() != c2.is_zero() {
        return HyperEquivVerdict::NotEquivalent;
    }
    let support = q1.support();
    if support != q2.support() {
        return HyperEquivVerdict::NotEquivalent;
    }
    let settle = |mu: FieldElement| match lambda_for_mu(q1, q2, &mu) {
        None => HyperEquivVerdict::NotEquivalent,
        Some(lambda) => match witness_or_undecidable(lambda, mu, ctx) {
            Ok(w) => HyperEquivVerdict::Equivalent(w),
            Err(v) => v,
        },
    };
    if !c1.is_zero() {
        return settle(c1 / c2);
    }
    if support.len() <= 1 {
        return settle(FieldElement::one());
    }

    // c1 = c2 = 0: every gap j - j0 pins mu^(j - j0).
    let j0 = support[0];
    let ratio = |j: usize| {
        let num = &q2.coeff(j) * &q1.coeff(j0);
        let den = &q1.coeff(j) * &q2.coeff(j0);
        &num / &den
    };
    let gaps: Vec<(i64, FieldElement)> = support[1..]
        .iter()
        .map(|&j| ((j - j0) as i64, ratio(j)))
        .collect();
    // mu^g = rho with g the gcd of the gaps, via a Bezout combination
    let mut g = 0i64;
    let mut rho = FieldElement::one();
    for (d, r) in &gaps {
        let e = g.extended_gcd(d);
        let (a, b) = (e.x, e.y);
        rho = &rho.pow(a).expect("nonzero") * &r.pow(b).expect("nonzero");
        g = e.gcd;
    }
    for (d, r) in &gaps {
        if rho.pow(d / g).expect("nonzero") != *r {
            return HyperEquivVerdict::NotEquivalent;
        }
    }
    let candidates = roots_in_field(&rho, g as u32, ctx);
    if candidates.is_empty() {
        return HyperEquivVerdict::NotDecidableInField {
            relation: format!("mu^{} = {}", g, rho),
            lambda: None,
            mu: None,
        };
    }
    let mut fallback = None;
    for mu in candidates {
        match settle(mu) {
            v @ HyperEquivVerdict::Equivalent(_) => return v,
            v @ HyperEquivVerdict::NotDecidableInField { .. } => {
                fallback.get_or_insert(v);
            }
            HyperEquivVerdict::NotEquivalent => {}
        }
    }
    fallback.unwrap_or(HyperEquivVerdict::NotEquivalent)
}
