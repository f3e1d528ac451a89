//! Automorphisms of `Q[x, y, z, w]` exchanging `P_q` and `P_(q(0))`.

use serde::Serialize;

use crate::certificate::{Basis, Certificate};
use crate::field::FieldElement;
use crate::hypersurface::pq_polynomial;
use crate::morphisms::RingEndomorphism;
use crate::poly::{PolyError, Polynomial, RingSignature, UnivariatePoly, Var};

const STABLE_ANCHOR: &str = "stable equivalence of P_q and P_(q(0))";

/// The maps share one shape: with `u = x^[1]`, a sign `s`, a key polynomial `K`
/// and a source polynomial `p`,
///
/// ```text
/// z -> (1 - s*u*r(K)) z + s*u^2 w
/// w -> (1 + s*u*r(K)) w - s*r(K)^2 z
/// y -> (K - z'^2 - u*p(z'^2)) / u^2      (z' the image of z)
/// ```
///
/// For `Phi`: `s = 1`, `K = P_(q(0))`, `p = q`. For `Psi`: `s = -1`,
/// `K = P_q`, `p = q(0)`.
#[derive(Debug, Clone)]
struct Shear {
    sign: i64,
    key: Polynomial,
    r: UnivariatePoly,
    source: UnivariatePoly,
}

impl Shear {
    /// Images of `(y, z, w)` when the shape is evaluated with `z`, `w`, `K`
    /// replaced by the given polynomials.
    fn materialize(
        &self,
        key: &Polynomial,
        z: &Polynomial,
        w: &Polynomial,
    ) -> Result<[Polynomial; 3], PolyError> {
        let sig = key.signature();
        let s = FieldElement::from_int(self.sign);
        let u = Polynomial::x_power_bracket(sig, 1);
        let u2 = Polynomial::x_power_bracket(sig, 2);
        let one = Polynomial::one(sig);
        let rk = self.r.eval_poly(key)?;
        let urk = u.try_mul(&rk)?.scale(&s);
        let zi = one
            .try_sub(&urk)?
            .try_mul(z)?
            .try_add(&u2.try_mul(w)?.scale(&s))?;
        let wi = one
            .try_add(&urk)?
            .try_mul(w)?
            .try_sub(&rk.try_mul(&rk)?.try_mul(z)?.scale(&s))?;
        let zi2 = zi.try_mul(&zi)?;
        let num = key
            .try_sub(&zi2)?
            .try_sub(&u.try_mul(&self.source.eval_poly(&zi2)?)?)?;
        let yi = num.exact_divide(&u2)?;
        Ok([yi, zi, wi])
    }

    fn endomorphism(&self, sig: RingSignature) -> Result<RingEndomorphism, PolyError> {
        let [y, z, w] = self.materialize(
            &self.key,
            &Polynomial::gen(sig, Var::Z),
            &Polynomial::gen(sig, Var::W),
        )?;
        RingEndomorphism::from_images(sig, &[(Var::Y, y), (Var::Z, z), (Var::W, w)])
    }

    /// True when `map` is exactly this shape.
    fn matches(&self, map: &RingEndomorphism) -> bool {
        self.endomorphism(map.signature())
            .map(|m| m == *map)
            .unwrap_or(false)
    }
}

/// The pair `(Phi, Psi)` with `Phi(P_q) = P_(q(0))` and `Psi = Phi^-1`.
#[derive(Debug, Clone, Serialize)]
pub struct StableEquivPair {
    pub phi: RingEndomorphism,
    pub psi: RingEndomorphism,
    #[serde(skip)]
    shapes: Option<(Shear, Shear)>,
}

impl StableEquivPair {
    /// A pair with arbitrary maps, e.g. for negative controls.
    pub fn from_maps(phi: RingEndomorphism, psi: RingEndomorphism) -> Self {
        StableEquivPair { phi, psi, shapes: None }
    }

    pub fn signature(&self) -> RingSignature {
        self.phi.signature()
    }
}

fn shapes(q: &UnivariatePoly, sig: RingSignature) -> Result<(Shear, Shear), PolyError> {
    let q0 = UnivariatePoly::constant(q.coeff(0));
    let r = q.half_t_quotient();
    let p0 = pq_polynomial(sig, &q0)?;
    let pq = pq_polynomial(sig, q)?;
    Ok((
        Shear { sign: 1, key: p0, r: r.clone(), source: q.clone() },
        Shear { sign: -1, key: pq, r, source: q0 },
    ))
}

pub fn build_stable_equivalence(
    q: &UnivariatePoly,
    n: usize,
) -> Result<StableEquivPair, PolyError> {
    let sig = RingSignature::new(n, true)?;
    let (phi_shape, psi_shape) = shapes(q, sig)?;
    Ok(StableEquivPair {
        phi: phi_shape.endomorphism(sig)?,
        psi: psi_shape.endomorphism(sig)?,
        shapes: Some((phi_shape, psi_shape)),
    })
}

fn fixes_x(map: &RingEndomorphism) -> bool {
    let sig = map.signature();
    (1..=sig.n()).all(|i| map.image(Var::X(i)) == Some(&Polynomial::gen(sig, Var::X(i))))
}

/// `outer` after `inner`. When `inner` has the shear shape and `outer` fixes
/// the x-variables, the images are obtained by pushing `outer` through the
/// shape (`outer(K)` computed directly), which avoids substituting into the
/// large image of `y`. Otherwise generators are composed one at a time.
fn compose_generators(
    outer: &RingEndomorphism,
    inner: &RingEndomorphism,
    inner_shape: Option<&Shear>,
) -> Vec<(Var, Result<Polynomial, PolyError>)> {
    let sig = inner.signature();
    let route = inner_shape.filter(|s| fixes_x(outer) && fixes_x(inner) && s.matches(inner));
    if let Some(shape) = route {
        let pushed = outer.apply(&shape.key).and_then(|key| {
            shape.materialize(
                &key,
                outer.image(Var::Z).expect("z"),
                outer.image(Var::W).expect("w"),
            )
        });
        let mut out: Vec<(Var, Result<Polynomial, PolyError>)> = (1..=sig.n())
            .map(|i| (Var::X(i), Ok(Polynomial::gen(sig, Var::X(i)))))
            .collect();
        match pushed {
            Ok([y, z, w]) => {
                out.push((Var::Y, Ok(y)));
                out.push((Var::Z, Ok(z)));
                out.push((Var::W, Ok(w)));
            }
            Err(e) => {
                for v in [Var::Y, Var::Z, Var::W] {
                    out.push((v, Err(e.clone())));
                }
            }
        }
        return out;
    }
    sig.vars()
        .map(|v| (v, outer.apply(inner.image(v).expect("generator"))))
        .collect()
}

/// Certificate that `pair` is a pair of mutually inverse automorphisms of
/// `Q[x, y, z, w]` with `Phi(P_q) = P_(q(0))` and `Psi(P_(q(0))) = P_q`.
pub fn verify_stable_equivalence(
    pair: &StableEquivPair,
    q: &UnivariatePoly,
    n: usize,
) -> Certificate {
    let mut cert = Certificate::new(
        format!("P_q and P_(q(0)) are equivalent in Q[x,y,z,w] for q(t) = {}, n = {}", q, n),
        serde_json::json!({ "n": n, "q": q }),
    );
    let sig = match RingSignature::new(n, true) {
        Ok(s) => s,
        Err(e) => {
            cert.check_zero("signature", STABLE_ANCHOR, Err(e));
            return cert;
        }
    };
    if pair.signature() != sig {
        cert.check_zero(
            "signature",
            STABLE_ANCHOR,
            Err(PolyError::SignatureMismatch(sig, pair.signature())),
        );
        return cert;
    }
    let q0 = UnivariatePoly::constant(q.coeff(0));
    let pq = pq_polynomial(sig, q);
    let p0 = pq_polynomial(sig, &q0);
    let (pq, p0) = match (pq, p0) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            cert.check_zero("build P_q", STABLE_ANCHOR, Err(e));
            return cert;
        }
    };
    cert.check_zero(
        "Phi(P_q) = P_(q(0))",
        STABLE_ANCHOR,
        pair.phi.apply(&pq).and_then(|img| img.try_sub(&p0)),
    );
    cert.check_zero(
        "Psi(P_(q(0))) = P_q",
        STABLE_ANCHOR,
        pair.psi.apply(&p0).and_then(|img| img.try_sub(&pq)),
    );
    let (phi_shape, psi_shape) = match &pair.shapes {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    for (label, outer, inner, shape) in [
        ("Phi(Psi", &pair.phi, &pair.psi, psi_shape),
        ("Psi(Phi", &pair.psi, &pair.phi, phi_shape),
    ] {
        for (v, img) in compose_generators(outer, inner, shape) {
            cert.check_zero(
                format!("{}({})) = {}", label, v, v),
                STABLE_ANCHOR,
                img.and_then(|p| p.try_sub(&Polynomial::gen(sig, v))),
            );
        }
    }
    if let Some(phi_y) = pair.phi.image(Var::Y) {
        let k = q.degree().unwrap_or(0) as u32;
        let deg_p0 = p0.degree().unwrap_or(0);
        let bound = 2 * k * deg_p0 + 2;
        let dy = phi_y.degree_in(Var::Y);
        cert.check(
            format!("deg_y Phi(y) = {} <= 2 deg(q) deg(P_(q(0))) + 2 = {}", dy, bound),
            STABLE_ANCHOR,
            Basis::Exact,
            dy <= bound,
            None,
        );
        let total = phi_y.degree().unwrap_or(0);
        let total_bound = total_degree_bound(k, n as u32);
        cert.check(
            format!("deg Phi(y) = {} <= {}", total, total_bound),
            STABLE_ANCHOR,
            Basis::Exact,
            total <= total_bound,
            None,
        );
    }
    cert
}

/// Bound on the total degree of `Phi(y)` for `deg q = k`: `Phi(z)` has degree
/// at most `e = max(n + (k-1)(2n+1) + 1, 2n+1)`, so `u*q(Phi(z)^2)` has degree at most
/// `n + 2ke` and division by `u^2` removes `2n`.
pub fn total_degree_bound(k: u32, n: u32) -> u32 {
    if k == 0 {
        return 2 * n + 2;
    }
    let e = (n + (k - 1) * (2 * n + 1) + 1).max(2 * n + 1);
    n + 2 * k * e - 2 * n
}
