//! The hypersurfaces `V(P_q - c)` with `P_q = x^[2]*y + z^2 + x^[1]*q(z^2)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::certificate::Certificate;
use crate::field::FieldElement;
use crate::morphisms::RingEndomorphism;
use crate::poly::{reduce_mod_relation, PolyError, Polynomial, RingSignature, UnivariatePoly, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HypersurfaceError {
    #[error("specs live in different ambient spaces (n = {left} vs n = {right})")]
    DimensionMismatch { left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct PqSpec {
    n: usize,
    q: UnivariatePoly,
    c: FieldElement,
}

#[derive(Deserialize)]
struct RawSpec {
    n: usize,
    q: UnivariatePoly,
    c: FieldElement,
}

impl TryFrom<RawSpec> for PqSpec {
    type Error = PolyError;
    fn try_from(r: RawSpec) -> Result<Self, PolyError> {
        PqSpec::new(r.n, r.q, r.c)
    }
}

impl PqSpec {
    pub fn new(n: usize, q: UnivariatePoly, c: FieldElement) -> Result<Self, PolyError> {
        RingSignature::new(n, false)?;
        Ok(PqSpec { n, q, c })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> &UnivariatePoly {
        &self.q
    }

    pub fn c(&self) -> &FieldElement {
        &self.c
    }

    /// `Q[x1..xn, y, z]`.
    pub fn signature(&self) -> RingSignature {
        RingSignature::new(self.n, false).expect("n >= 1 checked at construction")
    }

    pub fn q_at_c(&self) -> FieldElement {
        self.q.eval(&self.c)
    }

    /// This `PqSpec` with `q` replaced by the constant `q(c)`.
    pub fn constant_reduction(&self) -> PqSpec {
        PqSpec {
            n: self.n,
            q: UnivariatePoly::constant(self.q_at_c()),
            c: self.c.clone(),
        }
    }

    pub fn pq(&self) -> Polynomial {
        build_pq(self)
    }

    /// `P_q - c`.
    pub fn relation(&self) -> Polynomial {
        let sig = self.signature();
        self.pq() - Polynomial::constant(sig, self.c.clone())
    }

    /// `c - z^2 - x^[1]*q(z^2)`, the value of `x^[2]*y` modulo the relation.
    pub fn rewrite_rhs(&self) -> Result<Polynomial, PolyError> {
        let sig = self.signature();
        let z2 = Polynomial::gen(sig, Var::Z).pow(2);
        let u = Polynomial::x_power_bracket(sig, 1);
        let tail = u.try_mul(&self.q.eval_poly(&z2)?)?;
        Polynomial::constant(sig, self.c.clone())
            .try_sub(&z2)?
            .try_sub(&tail)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("spec serializes")
    }
}

impl fmt::Display for PqSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={}, q(t)={}, c={}", self.n, self.q, self.c)
    }
}

/// `x^[2]*y + z^2 + x^[1]*q(z^2)` in any signature with `n` x-variables.
pub fn pq_polynomial(sig: RingSignature, q: &UnivariatePoly) -> Result<Polynomial, PolyError> {
    let z2 = Polynomial::gen(sig, Var::Z).pow(2);
    let head = Polynomial::x_power_bracket(sig, 2).try_mul(&Polynomial::gen(sig, Var::Y))?;
    let tail = Polynomial::x_power_bracket(sig, 1).try_mul(&q.eval_poly(&z2)?)?;
    head.try_add(&z2)?.try_add(&tail)
}

pub fn build_pq(spec: &PqSpec) -> Polynomial {
    pq_polynomial(spec.signature(), &spec.q).expect("P_q stays far below the term limit")
}

/// One of the four classes `V_{a,b}`: `a = [q(c) != 0]`, `b = [c != 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IsoClass {
    pub xi_coeff_nonzero: bool,
    pub level_nonzero: bool,
}

impl IsoClass {
    pub const V00: IsoClass = IsoClass { xi_coeff_nonzero: false, level_nonzero: false };
    pub const V01: IsoClass = IsoClass { xi_coeff_nonzero: false, level_nonzero: true };
    pub const V10: IsoClass = IsoClass { xi_coeff_nonzero: true, level_nonzero: false };
    pub const V11: IsoClass = IsoClass { xi_coeff_nonzero: true, level_nonzero: true };

    /// The representative `x^[2]*y + z^2 + a*x^[1] - b`.
    pub fn representative(&self, n: usize) -> PqSpec {
        let a = i64::from(self.xi_coeff_nonzero);
        let b = i64::from(self.level_nonzero);
        PqSpec::new(n, UnivariatePoly::from_ints(&[a]), FieldElement::from_int(b))
            .expect("n >= 1")
    }
}

impl fmt::Display for IsoClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "V_{{{},{}}}",
            u8::from(self.xi_coeff_nonzero),
            u8::from(self.level_nonzero)
        )
    }
}

impl FromStr for IsoClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "V_{0,0}" => Ok(IsoClass::V00),
            "V_{0,1}" => Ok(IsoClass::V01),
            "V_{1,0}" => Ok(IsoClass::V10),
            "V_{1,1}" => Ok(IsoClass::V11),
            _ => Err(format!("unknown class '{}'", s)),
        }
    }
}

impl Serialize for IsoClass {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for IsoClass {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

pub fn classify(spec: &PqSpec) -> IsoClass {
    IsoClass {
        xi_coeff_nonzero: !spec.q_at_c().is_zero(),
        level_nonzero: !spec.c.is_zero(),
    }
}

pub fn isomorphic(a: &PqSpec, b: &PqSpec) -> Result<bool, HypersurfaceError> {
    if a.n != b.n {
        return Err(HypersurfaceError::DimensionMismatch { left: a.n, right: b.n });
    }
    Ok(classify(a) == classify(b))
}

/// The pair `(phi_c, psi_c)` relating `V(P_q - c)` and `V(P_{q(c)} - c)`.
pub fn fiber_isomorphism(spec: &PqSpec) -> (RingEndomorphism, RingEndomorphism) {
    let sig = spec.signature();
    let y = Polynomial::gen(sig, Var::Y);
    let z2 = Polynomial::gen(sig, Var::Z).pow(2);
    let u = Polynomial::x_power_bracket(sig, 1);
    let one = Polynomial::one(sig);
    let g = spec
        .q
        .difference_quotient(&spec.c)
        .eval_poly(&z2)
        .expect("small polynomial");
    let ug = &u * &g;
    let phi_y = &(&one + &ug) * &y + g.scale(&spec.q_at_c());
    let psi_y = &(&one - &ug) * &y - &spec.q.eval_poly(&z2).expect("small polynomial") * &g;
    let phi = RingEndomorphism::from_images(sig, &[(Var::Y, phi_y)]).expect("same signature");
    let psi = RingEndomorphism::from_images(sig, &[(Var::Y, psi_y)]).expect("same signature");
    (phi, psi)
}

pub fn verify_fiber_isomorphism(spec: &PqSpec) -> Certificate {
    let (phi, psi) = fiber_isomorphism(spec);
    check_fiber_isomorphism(spec, &phi, &psi)
}

const FIBER_ANCHOR: &str = "fiber isomorphism to the constant case";

/// Checks a candidate pair against the fiber-isomorphism identities.
pub fn check_fiber_isomorphism(
    spec: &PqSpec,
    phi: &RingEndomorphism,
    psi: &RingEndomorphism,
) -> Certificate {
    let sig = spec.signature();
    let target = spec.constant_reduction();
    let mut cert = Certificate::new(
        format!("V(P_q - c) is isomorphic to V(P_(q(c)) - c) for {}", spec),
        spec.to_json(),
    );
    let z2 = Polynomial::gen(sig, Var::Z).pow(2);
    let u = Polynomial::x_power_bracket(sig, 1);
    let g = spec.q.difference_quotient(&spec.c).eval_poly(&z2);
    let unit = g.and_then(|g| Polynomial::one(sig).try_add(&u.try_mul(&g)?));

    cert.check_zero(
        "phi(P_q - c) = (1 + x^[1] g(z^2)) (P_(q(c)) - c)",
        FIBER_ANCHOR,
        unit.clone().and_then(|unit| {
            phi.apply(&spec.relation())?
                .try_sub(&unit.try_mul(&target.relation())?)
        }),
    );
    let origin: Vec<(Var, Polynomial)> =
        (1..=sig.n()).map(|i| (Var::X(i), Polynomial::zero(sig))).collect();
    cert.check_zero(
        "the factor is 1 at x = 0",
        FIBER_ANCHOR,
        unit.and_then(|unit| unit.substitute_vars(&origin)?.try_sub(&Polynomial::one(sig))),
    );
    cert.check_zero(
        "psi(P_(q(c)) - c) vanishes modulo P_q - c",
        FIBER_ANCHOR,
        psi.apply(&target.relation())
            .and_then(|p| reduce_mod_relation(&p, spec)),
    );
    match psi.compose(phi) {
        Ok(back) => {
            for (v, r) in back.generator_residuals() {
                cert.check_zero(
                    format!("psi(phi({})) = {} modulo P_q - c", v, v),
                    FIBER_ANCHOR,
                    reduce_mod_relation(&r, spec),
                );
            }
        }
        Err(e) => cert.check_zero("psi after phi", FIBER_ANCHOR, Err(e)),
    }
    match phi.compose(psi) {
        Ok(forth) => {
            for (v, r) in forth.generator_residuals() {
                cert.check_zero(
                    format!("phi(psi({})) = {} modulo P_(q(c)) - c", v, v),
                    FIBER_ANCHOR,
                    reduce_mod_relation(&r, &target),
                );
            }
        }
        Err(e) => cert.check_zero("phi after psi", FIBER_ANCHOR, Err(e)),
    }
    cert
}
