//! Normal forms modulo `P_q - c` by the single rewrite `x^[2]*y -> c - z^2 - x^[1]*q(z^2)`.

use super::{Monomial, PolyError, Polynomial, Var};
use crate::hypersurface::PqSpec;

/// Normal form of `p` modulo `P_q - c`.
pub fn reduce_mod_relation(p: &Polynomial, spec: &PqSpec) -> Result<Polynomial, PolyError> {
    reduce_mod_relation_counted(p, spec).map(|(r, _)| r)
}

/// Like [`reduce_mod_relation`], also returning the number of rewrite rounds.
///
/// Each round rewrites every term divisible by `x^[2]*y` at once and lowers
/// the largest y-degree among such terms by one, so the count never exceeds
/// `deg_y(p) + 1`.
pub fn reduce_mod_relation_counted(
    p: &Polynomial,
    spec: &PqSpec,
) -> Result<(Polynomial, usize), PolyError> {
    let sig = spec.signature();
    if p.signature() != sig {
        return Err(PolyError::SignatureMismatch(p.signature(), sig));
    }
    let y = sig.index(Var::Y).expect("y in signature");
    let mut lead = Monomial::one(sig.nvars());
    for e in lead.0.iter_mut().take(sig.n()) {
        *e = 2;
    }
    lead.0[y] = 1;
    let rhs = spec.rewrite_rhs()?;

    let mut current = p.clone();
    let mut steps = 0;
    loop {
        let mut quotient = Polynomial::zero(sig);
        let mut rest = Polynomial::zero(sig);
        for (m, c) in current.terms() {
            if lead.divides(m) {
                quotient.add_term(m.div(&lead), c);
            } else {
                rest.add_term(m.clone(), c);
            }
        }
        if quotient.is_zero() {
            return Ok((current, steps));
        }
        steps += 1;
        current = rest.try_add(&quotient.try_mul(&rhs)?)?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldElement;
    use crate::poly::UnivariatePoly;
    use proptest::prelude::*;

    fn spec(n: usize, q: &str, c: i64) -> PqSpec {
        PqSpec::new(n, q.parse().unwrap(), FieldElement::from_int(c)).unwrap()
    }

    #[test]
    fn relation_reduces_to_zero() {
        for s in [spec(1, "-1,1", 1), spec(2, "1,-2,1", 0), spec(3, "", 2)] {
            let rel = s.relation();
            assert!(reduce_mod_relation(&rel, &s).unwrap().is_zero());
        }
    }

    #[test]
    fn single_rewrite() {
        let s = spec(2, "-1,1", 3);
        let sig = s.signature();
        let p = Polynomial::parse("x1^2*x2^2*y", sig).unwrap();
        let (r, steps) = reduce_mod_relation_counted(&p, &s).unwrap();
        assert_eq!(steps, 1);
        assert_eq!(r, Polynomial::parse("3 - z^2 - x1*x2*z^2 + x1*x2", sig).unwrap());
    }

    #[test]
    fn normal_input_is_fixed() {
        let s = spec(2, "-1,1", 3);
        let p = Polynomial::parse("x1^2*x2*y^5 + x1*x2^3*y + z^7 - 4", s.signature()).unwrap();
        assert_eq!(reduce_mod_relation(&p, &s).unwrap(), p);
    }

    #[test]
    fn rejects_other_rings() {
        let s = spec(1, "-1,1", 1);
        let p = Polynomial::parse("x1 + x2", crate::poly::RingSignature::new(2, false).unwrap())
            .unwrap();
        assert!(reduce_mod_relation(&p, &s).is_err());
    }

    fn arb_poly_in(sig: crate::poly::RingSignature) -> impl Strategy<Value = Polynomial> {
        let term = (prop::collection::vec(0u32..=3, sig.nvars()), -5i64..=5);
        prop::collection::vec(term, 0..6).prop_map(move |ts| {
            Polynomial::from_terms(
                sig,
                ts.into_iter()
                    .map(|(e, k)| (Monomial::from_exponents(&e), FieldElement::from_int(k))),
            )
        })
    }

    fn arb_case() -> impl Strategy<Value = (PqSpec, Polynomial, Polynomial)> {
        (1usize..=2, prop::collection::vec(-3i64..=3, 0..=3), -2i64..=2).prop_flat_map(
            |(n, qs, c)| {
                let s = PqSpec::new(n, UnivariatePoly::from_ints(&qs), FieldElement::from_int(c))
                    .unwrap();
                let sig = s.signature();
                (Just(s), arb_poly_in(sig), arb_poly_in(sig))
            },
        )
    }

    proptest! {
        #[test]
        fn projection_properties((s, p, h) in arb_case()) {
            let (r, steps) = reduce_mod_relation_counted(&p, &s).unwrap();
            prop_assert!(steps as u32 <= p.degree_in(Var::Y) + 1);
            // idempotent
            prop_assert_eq!(reduce_mod_relation(&r, &s).unwrap(), r.clone());
            // kills the ideal
            let shifted = &p + &(&s.relation() * &h);
            prop_assert_eq!(reduce_mod_relation(&shifted, &s).unwrap(), r.clone());
            // no term is divisible by x^[2]*y
            let lead = Polynomial::x_power_bracket(s.signature(), 2) * Polynomial::gen(s.signature(), Var::Y);
            let (lm, _) = lead.leading_term().unwrap();
            prop_assert!(r.terms().all(|(m, _)| !lm.divides(m)));
        }
    }
}
