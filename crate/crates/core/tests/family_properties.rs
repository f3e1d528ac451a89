use proptest::prelude::*;
use stably_distinct::equivalence::{
    build_hyper_equiv_automorphism, build_hyper_equiv_inverse, build_poly_equiv_automorphism,
    decide_hypersurface_equivalence, decide_poly_equivalence, HyperEquivVerdict, PolyEquivVerdict,
};
use stably_distinct::field::{FieldContext, FieldElement};
use stably_distinct::hypersurface::{classify, verify_fiber_isomorphism, IsoClass, PqSpec};
use stably_distinct::morphisms::{build_delta, nilpotency_index, DEFAULT_NILPOTENCY_CAP};
use stably_distinct::poly::{Monomial, Polynomial, UnivariatePoly, Var};

fn rational(bound: i64) -> impl Strategy<Value = FieldElement> {
    (-bound..=bound, 1..=bound).prop_map(|(a, b)| FieldElement::from_ratio(a, b))
}

fn nonzero(bound: i64) -> impl Strategy<Value = FieldElement> {
    rational(bound).prop_filter("nonzero", |a| !a.is_zero())
}

fn upoly(max_deg: usize, bound: i64) -> impl Strategy<Value = UnivariatePoly> {
    prop::collection::vec(rational(bound), 0..=max_deg + 1).prop_map(UnivariatePoly::new)
}

fn level() -> impl Strategy<Value = FieldElement> {
    prop::sample::select(vec!["0", "1", "-1", "2", "-2", "1/2"])
        .prop_map(|s| s.parse().unwrap())
}

fn spec() -> impl Strategy<Value = PqSpec> {
    (1usize..=3, upoly(5, 20), level()).prop_map(|(n, q, c)| PqSpec::new(n, q, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fiber_isomorphism_certificates(s in spec()) {
        let cert = verify_fiber_isomorphism(&s);
        prop_assert!(cert.passed(), "{}", cert.render_text());
    }

    #[test]
    fn classification_depends_on_q_at_c_only(s in spec()) {
        prop_assert_eq!(classify(&s), classify(&s.constant_reduction()));
        let rep = classify(&s).representative(s.n());
        prop_assert_eq!(classify(&rep), classify(&s));
    }

    #[test]
    fn delta_kills_the_relation(s in spec()) {
        let d = build_delta(&s);
        prop_assert!(d.apply(&s.relation()).unwrap().is_zero());
    }
}

#[test]
fn q_family_classes_do_not_depend_on_k() {
    let levels = ["0", "1", "2", "-1", "1/2", "3", "-7/3"];
    for c in levels {
        let c: FieldElement = c.parse().unwrap();
        let classes: Vec<IsoClass> = (1..=6)
            .map(|k| {
                let q = UnivariatePoly::from_ints(&[-1, 1]).pow(k);
                classify(&PqSpec::new(2, q, c.clone()).unwrap())
            })
            .collect();
        assert!(classes.iter().all(|x| *x == classes[0]), "c = {}", c);
    }
}

fn z_poly() -> impl Strategy<Value = Polynomial> {
    let term = (0u32..=2, 0u32..=3, 0u32..=8, rational(5));
    prop::collection::vec(term, 1..=4).prop_map(|ts| {
        let sig = stably_distinct::poly::RingSignature::new(1, false).unwrap();
        Polynomial::from_terms(
            sig,
            ts.into_iter()
                .map(|(x, y, z, c)| (Monomial::from_exponents(&[x, y, z]), c)),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn nilpotency_within_bound(q in upoly(3, 5), c in level(), p in z_poly()) {
        let s = PqSpec::new(1, q, c).unwrap();
        let d = build_delta(&s);
        let m = nilpotency_index(&d, &p, None, DEFAULT_NILPOTENCY_CAP).unwrap() as u32;
        let dz = d.image(Var::Y).unwrap().degree_in(Var::Z);
        // z has weight 1, y has weight deg_z(Delta y) + 1, and Delta lowers weight
        let weighted = p.degree_in(Var::Z) + (dz + 1) * p.degree_in(Var::Y) + 1;
        prop_assert!(m <= weighted, "index {} > bound {}", m, weighted);
        if p.degree_in(Var::Y) <= 1 {
            prop_assert!(m <= p.degree_in(Var::Z) + dz * p.degree_in(Var::Y) + 2);
        }
    }
}

#[test]
fn nilpotency_of_y_squared() {
    let s = PqSpec::new(1, UnivariatePoly::zero(), FieldElement::zero()).unwrap();
    let d = build_delta(&s);
    let y2 = Polynomial::gen(s.signature(), Var::Y).pow(2);
    // Delta^4(y^2) = 24 x1^4
    let mut it = y2.clone();
    for _ in 0..4 {
        it = d.apply(&it).unwrap();
    }
    assert_eq!(it, Polynomial::parse("24*x1^4", s.signature()).unwrap());
    assert_eq!(nilpotency_index(&d, &y2, None, DEFAULT_NILPOTENCY_CAP).unwrap(), 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn polynomial_equivalence_is_an_equivalence_relation(
        base in upoly(3, 6),
        l1 in nonzero(6),
        l2 in nonzero(6),
        other in upoly(3, 6),
        c in level(),
        pick in 0usize..4,
    ) {
        let q1 = base.clone();
        let q2 = base.scale(&l1);
        let q3 = if pick == 0 { other } else { q2.scale(&l2) };
        let lam = |a: &UnivariatePoly, b: &UnivariatePoly| match decide_poly_equivalence(a, &c, b, &c) {
            PolyEquivVerdict::Equivalent(w) => Some(w.lambda),
            PolyEquivVerdict::NotEquivalent => None,
        };
        prop_assert!(lam(&q1, &q1).is_some());
        let a12 = lam(&q1, &q2);
        let a21 = lam(&q2, &q1);
        prop_assert!(a12.is_some());
        prop_assert!(a21.is_some());
        if !q1.is_zero() {
            prop_assert_eq!(&a12.clone().unwrap() * &a21.unwrap(), FieldElement::one());
        }
        if let (Some(x), Some(y)) = (lam(&q1, &q2), lam(&q2, &q3)) {
            let z = lam(&q1, &q3);
            prop_assert!(z.is_some());
            if !q1.is_zero() {
                prop_assert_eq!(z.unwrap(), &x * &y);
            }
        }
        let other_level = &c + &FieldElement::one();
        prop_assert_eq!(decide_poly_equivalence(&q1, &c, &q1, &other_level), PolyEquivVerdict::NotEquivalent);
    }

    #[test]
    fn polynomial_witness_is_sound(q1 in upoly(3, 6), lambda in nonzero(6), n in 1usize..=3) {
        let q2 = q1.scale(&lambda);
        let zero = FieldElement::zero();
        let PolyEquivVerdict::Equivalent(w) = decide_poly_equivalence(&q1, &zero, &q2, &zero) else {
            panic!("expected a witness");
        };
        let phi = build_poly_equiv_automorphism(&w, n).unwrap();
        let p1 = PqSpec::new(n, q1, zero.clone()).unwrap().pq();
        let p2 = PqSpec::new(n, q2, zero).unwrap().pq();
        prop_assert_eq!(phi.apply(&p1).unwrap(), p2);
    }

    #[test]
    fn hypersurface_witness_is_sound(
        q1 in upoly(3, 6),
        lambda in nonzero(4),
        root in nonzero(4),
        c1 in level(),
        n in 1usize..=2,
    ) {
        // mu = 1/root^2 keeps epsilon = root rational
        let mu = (&root * &root).checked_inv().unwrap();
        let q2 = q1.scale_argument(&mu).scale(&lambda);
        let c2 = c1.checked_div(&mu).unwrap();
        let verdict = decide_hypersurface_equivalence(&q1, &c1, &q2, &c2, &FieldContext::Rationals);
        let HyperEquivVerdict::Equivalent(w) = verdict else {
            panic!("expected a witness, got {}", verdict);
        };
        let r1 = PqSpec::new(n, q1, c1).unwrap().relation();
        let r2 = PqSpec::new(n, q2, c2).unwrap().relation();
        let theta = build_hyper_equiv_automorphism(&w, n).unwrap();
        let inv = build_hyper_equiv_inverse(&w, n).unwrap();
        let mu_inv = w.mu.checked_inv().unwrap();
        prop_assert_eq!(theta.apply(&r2).unwrap(), r1.scale(&mu_inv));
        prop_assert_eq!(inv.apply(&r1).unwrap(), r2.scale(&w.mu));
        prop_assert!(theta.compose(&inv).unwrap().is_identity());
    }
}
