//! End-to-end certificate for the two counterexample families.

use serde::{Deserialize, Serialize};

use super::stable::{build_stable_equivalence, verify_stable_equivalence, StableEquivPair};
use super::{
    decide_hypersurface_equivalence, decide_poly_equivalence, poly_equiv_automorphism_in,
    EquivalenceError, HyperEquivVerdict, PolyEquivVerdict,
};
use crate::certificate::{Basis, Certificate};
use crate::field::{FieldContext, FieldElement};
use crate::hypersurface::{classify, isomorphic, pq_polynomial, IsoClass, PqSpec};
use crate::morphisms::RingEndomorphism;
use crate::poly::{PolyError, Polynomial, RingSignature, UnivariatePoly};

const CYLINDER_ANCHOR: &str = "H1 x C and H2 x C are equivalent, H1 and H2 are not isomorphic";
const QK_ANCHOR: &str = "Q_k stably equivalent, pairwise non-equivalent, fiberwise isomorphic";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremOptions {
    pub n: usize,
    pub k_max: u32,
    pub c_samples: Vec<FieldElement>,
}

impl TheoremOptions {
    pub fn new(n: usize, k_max: u32) -> Self {
        TheoremOptions { n, k_max, c_samples: default_c_samples() }
    }
}

pub fn default_c_samples() -> Vec<FieldElement> {
    ["0", "1", "2", "-1", "1/2"]
        .iter()
        .map(|s| s.parse().expect("literal"))
        .collect()
}

fn t_minus(a: i64) -> UnivariatePoly {
    UnivariatePoly::from_ints(&[-a, 1])
}

fn q_k(k: u32) -> UnivariatePoly {
    t_minus(1).pow(k)
}

/// `Psi_2 . Lambda . Phi_1` as a single map, sending `P_(q1)` to `P_(q2)`,
/// where `Lambda` scales `P_(q1(0))` to `P_(q2(0))`.
fn chain(
    first: &StableEquivPair,
    lambda: &FieldElement,
    second: &StableEquivPair,
) -> Result<RingEndomorphism, EquivalenceError> {
    let scale = poly_equiv_automorphism_in(first.signature(), lambda)?;
    let inner = scale.compose(&first.phi)?;
    Ok(second.psi.compose(&inner)?)
}

fn sub_const(p: Result<Polynomial, PolyError>, c: i64) -> Result<Polynomial, PolyError> {
    p.and_then(|p| {
        let k = Polynomial::constant(p.signature(), FieldElement::from_int(c));
        p.try_sub(&k)
    })
}

fn cylinder_part(cert: &mut Certificate, n: usize) -> Result<(), EquivalenceError> {
    let one = FieldElement::one();
    let h1 = PqSpec::new(n, t_minus(1), one.clone())?;
    let h2 = PqSpec::new(n, t_minus(2), one.clone())?;
    let c1 = classify(&h1);
    let c2 = classify(&h2);
    cert.check(
        format!("classify(H1) = {} = V_{{0,1}}", c1),
        CYLINDER_ANCHOR,
        Basis::Cited,
        c1 == IsoClass::V01,
        None,
    );
    cert.check(
        format!("classify(H2) = {} = V_{{1,1}}", c2),
        CYLINDER_ANCHOR,
        Basis::Cited,
        c2 == IsoClass::V11,
        None,
    );
    cert.check(
        "H1 and H2 are not isomorphic",
        CYLINDER_ANCHOR,
        Basis::Cited,
        !isomorphic(&h1, &h2).map_err(|e| EquivalenceError::Precondition {
            reason: e.to_string(),
        })?,
        None,
    );

    let pair1 = build_stable_equivalence(h1.q(), n)?;
    let pair2 = build_stable_equivalence(h2.q(), n)?;
    cert.absorb("q = t - 1", verify_stable_equivalence(&pair1, h1.q(), n));
    cert.absorb("q = t - 2", verify_stable_equivalence(&pair2, h2.q(), n));

    let q10 = UnivariatePoly::constant(h1.q().coeff(0));
    let q20 = UnivariatePoly::constant(h2.q().coeff(0));
    let lambda = match decide_poly_equivalence(&q10, &one, &q20, &one) {
        PolyEquivVerdict::Equivalent(w) => w.lambda,
        PolyEquivVerdict::NotEquivalent => {
            cert.check(
                "P_(-1) - 1 and P_(-2) - 1 are equivalent",
                CYLINDER_ANCHOR,
                Basis::Exact,
                false,
                None,
            );
            return Ok(());
        }
    };
    cert.check(
        format!("P_(-1) - 1 and P_(-2) - 1 are equivalent with lambda = {}", lambda),
        CYLINDER_ANCHOR,
        Basis::Exact,
        true,
        None,
    );
    let inv = lambda.checked_inv().expect("nonzero lambda");
    let sig = pair1.signature();
    let p1 = pq_polynomial(sig, h1.q())?;
    let p2 = pq_polynomial(sig, h2.q())?;
    let forward = chain(&pair1, &lambda, &pair2)?;
    let backward = chain(&pair2, &inv, &pair1)?;
    cert.check_zero(
        "Theta(P_(t-1) - 1) = P_(t-2) - 1 in Q[x,y,z,w]",
        CYLINDER_ANCHOR,
        sub_const(forward.apply(&p1), 1).and_then(|a| a.try_sub(&sub_const(Ok(p2.clone()), 1)?)),
    );
    cert.check_zero(
        "Theta'(P_(t-2) - 1) = P_(t-1) - 1 in Q[x,y,z,w]",
        CYLINDER_ANCHOR,
        backward.apply(&p2).and_then(|a| a.try_sub(&p1)),
    );
    for (label, a, b) in [("Theta Theta'", &forward, &backward), ("Theta' Theta", &backward, &forward)] {
        match a.compose(b) {
            Ok(id) => {
                for (v, r) in id.generator_residuals() {
                    cert.check_zero(format!("{}({}) = {}", label, v, v), CYLINDER_ANCHOR, Ok(r));
                }
            }
            Err(e) => cert.check_zero(format!("{} = id", label), CYLINDER_ANCHOR, Err(e)),
        }
    }
    cert.note(
        "the closing example prints both polynomials as x^[2]y + z^2 + x^[1](z^2 - 1) - 1; \
         the pair used here is q = t - 1 and q = t - 2 as in the main statement",
    );
    Ok(())
}

fn q_family_part(cert: &mut Certificate, opts: &TheoremOptions) -> Result<(), EquivalenceError> {
    let n = opts.n;
    let zero = FieldElement::zero();
    let ks: Vec<u32> = (1..=opts.k_max).collect();
    for &k in &ks {
        for &k2 in &ks {
            if k >= k2 {
                continue;
            }
            let verdict =
                decide_hypersurface_equivalence(&q_k(k), &zero, &q_k(k2), &zero, &FieldContext::Rationals);
            cert.check(
                format!("V(Q_{}) and V(Q_{}) are not equivalent ({})", k, k2, verdict),
                QK_ANCHOR,
                Basis::Cited,
                verdict == HyperEquivVerdict::NotEquivalent,
                None,
            );
        }
    }
    for c in &opts.c_samples {
        let classes: Vec<IsoClass> = ks
            .iter()
            .map(|&k| PqSpec::new(n, q_k(k), c.clone()).map(|s| classify(&s)))
            .collect::<Result<_, _>>()?;
        cert.check(
            format!("V(Q_k - {}) all in class {} for k <= {}", c, classes[0], opts.k_max),
            QK_ANCHOR,
            Basis::Cited,
            classes.iter().all(|cl| *cl == classes[0]),
            None,
        );
    }

    let pairs: Vec<StableEquivPair> = ks
        .iter()
        .map(|&k| build_stable_equivalence(&q_k(k), n))
        .collect::<Result<_, _>>()?;
    for (&k, pair) in ks.iter().zip(&pairs) {
        cert.absorb(&format!("Q_{}", k), verify_stable_equivalence(pair, &q_k(k), n));
    }
    // Q_k -> P_((-1)^k) -> P_(-1) -> Q_1, step by step.
    let sig = RingSignature::new(n, true)?;
    let q1 = pq_polynomial(sig, &q_k(1))?;
    let minus_one = pq_polynomial(sig, &UnivariatePoly::from_ints(&[-1]))?;
    for &k in ks.iter().skip(1) {
        let sign = if k % 2 == 0 { -1 } else { 1 };
        let p0 = pq_polynomial(sig, &UnivariatePoly::from_ints(&[-sign]))?;
        let scale = poly_equiv_automorphism_in(sig, &FieldElement::from_int(sign))?;
        let residual = scale.apply(&p0).and_then(|p| {
            if p != minus_one {
                return p.try_sub(&minus_one);
            }
            pairs[0].psi.apply(&p)?.try_sub(&q1)
        });
        cert.check_zero(
            format!("Psi_1(Lambda(P_({}))) = Q_1 after Phi_{}(Q_{}) = P_({})", -sign, k, k, -sign),
            QK_ANCHOR,
            residual,
        );
    }
    Ok(())
}

/// Checks both families of counterexamples for a fixed number `n` of
/// x-variables.
pub fn theorem_certificate(opts: &TheoremOptions) -> Result<Certificate, EquivalenceError> {
    if opts.n == 0 {
        return Err(EquivalenceError::Precondition { reason: "n must be at least 1".into() });
    }
    if opts.k_max < 2 {
        return Err(EquivalenceError::Precondition { reason: "k_max must be at least 2".into() });
    }
    let mut cert = Certificate::new(
        format!(
            "counterexamples to stable equivalence for n = {}, Q_k with k <= {}",
            opts.n, opts.k_max
        ),
        serde_json::json!({ "n": opts.n, "k_max": opts.k_max, "c_samples": opts.c_samples }),
    );
    cylinder_part(&mut cert, opts.n)?;
    q_family_part(&mut cert, opts)?;
    cert.note(
        "non-equivalence and non-isomorphism verdicts rest on the classification and \
         the equivalence criterion; equivalences are certified by explicit maps",
    );
    Ok(cert)
}
