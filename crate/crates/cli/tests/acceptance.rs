//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::time::{Duration, Instant};

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stably_distinct::equivalence::{
    build_stable_equivalence, decide_hypersurface_equivalence, poly_equiv_automorphism_in,
    verify_stable_equivalence, HyperEquivVerdict, StableEquivPair,
};
use stably_distinct::field::{FieldContext, FieldElement};
use stably_distinct::hypersurface::{pq_polynomial, verify_fiber_isomorphism, PqSpec};
use stably_distinct::morphisms::{build_delta, decompose_as_delta_multiple, nilpotency_index, Derivation};
use stably_distinct::poly::{Monomial, Polynomial, RingSignature, UnivariatePoly, Var};
use stably_distinct::series::{biholomorphism, verify_biholomorphism};
use stably_distinct::sz::{
    check_chain_maps_to, sz_derivation, sz_fiber_isomorphism, sz_series, sz_stable_pair, PointSampler,
};
use stably_distinct::certificate::Certificate;
use stably_distinct_cli::{run_args, EXIT_PASS};

type Q = Ratio<i64>;

const SZ_POINTS: usize = 100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn cli(args: &str) -> stably_distinct_cli::Outcome {
    run_args(std::iter::once("stably-distinct").chain(args.split_whitespace()))
}

fn q_k(k: u32) -> UnivariatePoly {
    UnivariatePoly::from_ints(&[-1, 1]).pow(k)
}

fn within(elapsed: Duration, secs: u64) -> bool {
    elapsed <= Duration::from_secs(secs)
}

/// Specs with `deg q <= 3`, coefficients in `-2..=2` and `c` in `{0, 1, -1}`.
fn small_corpus() -> Vec<([i64; 4], i64)> {
    let mut out = Vec::new();
    for a in 0..625 {
        let mut coeffs = [0i64; 4];
        let mut r = a;
        for c in coeffs.iter_mut() {
            *c = r % 5 - 2;
            r /= 5;
        }
        for c in [0, 1, -1] {
            out.push((coeffs, c));
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for n in 1..=3 {
        let start = Instant::now();
        let out = cli(&format!("verify-theorem --n {} --k-max 3 --format json", n));
        let elapsed = start.elapsed();
        let v: serde_json::Value = match serde_json::from_str(&out.report) {
            Ok(v) => v,
            Err(_) => return outcome(false, format!("n = {}: {}", n, out.report)),
        };
        let checks = v["checks"].as_array().cloned().unwrap_or_default();
        let has = |needle: &str| checks.iter().any(|c| c["name"].as_str().unwrap_or("").contains(needle));
        let ok = out.code == EXIT_PASS
            && v["pass"] == true
            && has("Theta(P_(t-1) - 1) = P_(t-2) - 1")
            && has("H1 and H2 are not isomorphic")
            && has("V(Q_1) and V(Q_3) are not equivalent")
            && has("Q_3: Phi(P_q) = P_(q(0))")
            && has("V(Q_k - 1/2) all in class")
            && within(elapsed, 60);
        pass &= ok;
        notes.push(format!("n={}: {} checks in {:.2?}", n, checks.len(), elapsed));
    }
    outcome(pass, notes.join(", "))
}

fn random_spec(rng: &mut ChaCha8Rng) -> PqSpec {
    let rat = |rng: &mut ChaCha8Rng| FieldElement::from_ratio(rng.gen_range(-20..=20), rng.gen_range(1..=20));
    let n = rng.gen_range(1..=3);
    let deg = rng.gen_range(0..=5);
    let coeffs: Vec<FieldElement> = (0..=deg).map(|_| rat(rng)).collect();
    let c = rat(rng);
    PqSpec::new(n, UnivariatePoly::new(coeffs), c).expect("n >= 1")
}

fn random_specs() -> Vec<PqSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    (0..200).map(|_| random_spec(&mut rng)).collect()
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let specs = random_specs();
    let failed: Vec<String> = specs
        .iter()
        .filter(|s| !verify_fiber_isomorphism(s).passed())
        .map(|s| s.to_string())
        .collect();
    let elapsed = start.elapsed();
    outcome(
        failed.is_empty() && within(elapsed, 30),
        format!("{} specs, {} failed {:?}, {:.2?}", specs.len(), failed.len(), failed.first(), elapsed),
    )
}

/// `Phi` with the sign of the `r^2 z` term in `Phi(w)` flipped.
fn corrupted_pair(q: &UnivariatePoly, n: usize) -> StableEquivPair {
    let pair = build_stable_equivalence(q, n).expect("pair");
    let sig = pair.signature();
    let p0 = pq_polynomial(sig, &UnivariatePoly::constant(q.coeff(0))).expect("P_0");
    let r = q.half_t_quotient().eval_poly(&p0).expect("r(P_0)");
    let term = &(&r * &r) * &Polynomial::gen(sig, Var::Z);
    let bad_w = pair.phi.image(Var::W).expect("w") + &term.scale(&FieldElement::from_int(2));
    let phi = pair.phi.clone().with_image(Var::W, bad_w).expect("w in sig");
    StableEquivPair::from_maps(phi, pair.psi.clone())
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut notes = Vec::new();
    for k in 1..=3 {
        for n in 1..=2 {
            let q = q_k(k);
            let pair = build_stable_equivalence(&q, n).expect("pair");
            let cert = verify_stable_equivalence(&pair, &q, n);
            let generator_checks = cert
                .checks
                .iter()
                .filter(|c| c.name.starts_with("Phi(Psi("))
                .count();
            pass &= cert.passed() && generator_checks == n + 3;
            notes.push(format!("k={} n={}: {}", k, n, if cert.passed() { "ok" } else { "FAILED" }));
        }
    }
    for n in 1..=2 {
        let q = q_k(1);
        let cert = verify_stable_equivalence(&corrupted_pair(&q, n), &q, n);
        let caught = !cert.passed();
        pass &= caught;
        notes.push(format!("corrupted n={}: {}", n, if caught { "rejected" } else { "ACCEPTED" }));
    }
    let elapsed = start.elapsed();
    outcome(pass && within(elapsed, 30), format!("{}, {:.2?}", notes.join(", "), elapsed))
}

fn corpus_spec(coeffs: &[i64; 4], c: i64, n: usize) -> PqSpec {
    PqSpec::new(n, UnivariatePoly::from_ints(coeffs), FieldElement::from_int(c)).expect("n >= 1")
}

fn random_h(rng: &mut ChaCha8Rng, sig: RingSignature) -> Polynomial {
    loop {
        let mut h = Polynomial::zero(sig);
        for _ in 0..rng.gen_range(1..=4) {
            let mut e = vec![0u32; sig.nvars()];
            for x in e.iter_mut().take(sig.n()) {
                *x = rng.gen_range(0..=2);
            }
            let c = FieldElement::from_ratio(rng.gen_range(-9..=9), rng.gen_range(1..=5));
            h = &h + &Polynomial::term(sig, Monomial::from_exponents(&e), c);
        }
        if !h.is_zero() {
            return h;
        }
    }
}

fn random_multiples() -> Vec<(PqSpec, Polynomial)> {
    let corpus = small_corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    (0..50)
        .map(|_| {
            let (coeffs, c) = corpus[rng.gen_range(0..corpus.len())];
            let spec = corpus_spec(&coeffs, c, rng.gen_range(1..=3));
            let h = random_h(&mut rng, spec.signature());
            (spec, h)
        })
        .collect()
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut killed = 0;
    let mut within_bound = 0;
    let mut total = 0;
    let mut failures = Vec::new();
    for (coeffs, c) in small_corpus() {
        for n in 1..=2 {
            total += 1;
            let spec = corpus_spec(&coeffs, c, n);
            let delta = build_delta(&spec);
            if delta.apply(&spec.relation()).map(|p| p.is_zero()).unwrap_or(false) {
                killed += 1;
            } else {
                failures.push(format!("Delta(P - c) != 0 for {}", spec));
            }
            let y = Polynomial::gen(spec.signature(), Var::Y);
            let bound = delta.image(Var::Y).expect("y").degree_in(Var::Z) as usize + 2;
            match nilpotency_index(&delta, &y, None, bound) {
                Ok(m) if m <= bound => within_bound += 1,
                other => failures.push(format!("nilpotency of y for {}: {:?}", spec, other)),
            }
        }
    }
    let mut round_trips = 0;
    for (spec, h) in random_multiples() {
        let delta = build_delta(&spec).scaled(&h).expect("scaled");
        match decompose_as_delta_multiple(&delta, &spec) {
            Ok(h2) if h2 == h => round_trips += 1,
            other => failures.push(format!("decompose for {} with h = {}: {:?}", spec, h, other)),
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures.is_empty() && within(elapsed, 10),
        format!(
            "Delta kills {}/{} relations, y nilpotent within bound {}/{}, {}/50 round trips, {:.2?}{}",
            killed,
            total,
            within_bound,
            total,
            round_trips,
            elapsed,
            failures.first().map(|f| format!("; first failure: {}", f)).unwrap_or_default()
        ),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut notes = Vec::new();
    for (n, order) in [(1usize, 8u32), (2, 6)] {
        let out = cli(&format!("series-check --n {} --order {}", n, order));
        let ok = out.code == EXIT_PASS && out.report.starts_with("PASS");
        pass &= ok;
        notes.push(format!("n={} order={}: {}", n, order, if ok { "ok" } else { "FAILED" }));
    }
    for n in 1..=2 {
        let stable = match (biholomorphism(n, 8), biholomorphism(n, 6)) {
            (Ok(high), Ok(low)) => high.truncated(6).y == low.y && high.truncated(6).z == low.z,
            _ => false,
        };
        pass &= stable;
        notes.push(format!("n={} orders 6/8 agree: {}", n, stable));
    }
    let elapsed = start.elapsed();
    outcome(pass && within(elapsed, 5), format!("{}, {:.2?}", notes.join(", "), elapsed))
}

fn to_q(f: &FieldElement) -> Q {
    let r = f.as_rational().expect("rational");
    Q::new(r.numer().to_i64().expect("small"), r.denom().to_i64().expect("small"))
}

fn q_pow(x: Q, e: usize) -> Q {
    (0..e).fold(Q::from_integer(1), |acc, _| acc * x)
}

fn is_rational_square(x: Q) -> bool {
    let sq = |v: i64| v >= 0 && {
        let r = (v as f64).sqrt().round() as i64;
        r * r == v
    };
    sq(*x.numer()) && sq(*x.denom())
}

/// Some `(lambda, mu)` with `q2(t) = lambda q1(mu t)` and `c2 mu = c1`, by
/// brute force over a candidate list of `mu`. The second value is one whose
/// `1/mu` is a rational square, if any.
fn oracle(q1: &[i64; 4], c1: i64, q2: &[i64; 4], c2: i64, mus: &[Q]) -> (Option<Q>, Option<Q>) {
    let mut any = None;
    let mut in_field = None;
    let lead = q1.iter().position(|&a| a != 0);
    for &mu in mus {
        if Q::from_integer(c2) * mu != Q::from_integer(c1) {
            continue;
        }
        let works = match lead {
            None => q2.iter().all(|&a| a == 0),
            Some(i) => {
                let lambda = Q::from_integer(q2[i]) / (Q::from_integer(q1[i]) * q_pow(mu, i));
                !lambda.is_zero()
                    && (0..4).all(|j| Q::from_integer(q2[j]) == lambda * Q::from_integer(q1[j]) * q_pow(mu, j))
            }
        };
        if works {
            any.get_or_insert(mu);
            if in_field.is_none() && is_rational_square(mu.recip()) {
                in_field = Some(mu);
            }
        }
    }
    (any, in_field)
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let corpus = small_corpus();
    let ups: Vec<UnivariatePoly> = corpus.iter().map(|(q, _)| UnivariatePoly::from_ints(q)).collect();
    let cs: Vec<FieldElement> = corpus.iter().map(|&(_, c)| FieldElement::from_int(c)).collect();
    let mut base = Vec::new();
    for a in 1..=4i64 {
        for b in 1..=4i64 {
            for s in [1, -1] {
                let m = Q::new(s * a, b);
                if !base.contains(&m) {
                    base.push(m);
                }
            }
        }
    }
    let mut pairs = 0u64;
    let mut witnessed = 0u64;
    let mut not_equiv = 0u64;
    let mut undecided = 0u64;
    let mut failures: Vec<String> = Vec::new();
    for (i, (q1, c1)) in corpus.iter().enumerate() {
        for (j, (q2, c2)) in corpus.iter().enumerate() {
            pairs += 1;
            let mut mus = base.clone();
            if *c2 != 0 && *c1 != 0 {
                mus.push(Q::new(*c1, *c2));
            }
            let (any, in_field) = oracle(q1, *c1, q2, *c2, &mus);
            let verdict = decide_hypersurface_equivalence(&ups[i], &cs[i], &ups[j], &cs[j], &FieldContext::Rationals);
            let agrees = match &verdict {
                HyperEquivVerdict::Equivalent(w) => {
                    witnessed += 1;
                    let (lambda, mu, eps) = (to_q(&w.lambda), to_q(&w.mu), to_q(&w.epsilon));
                    let fits = !lambda.is_zero()
                        && !mu.is_zero()
                        && Q::from_integer(*c2) * mu == Q::from_integer(*c1)
                        && eps * eps * mu == Q::from_integer(1)
                        && (0..4).all(|k| Q::from_integer(q2[k]) == lambda * Q::from_integer(q1[k]) * q_pow(mu, k));
                    fits && in_field.is_some()
                }
                HyperEquivVerdict::NotEquivalent => {
                    not_equiv += 1;
                    any.is_none()
                }
                HyperEquivVerdict::NotDecidableInField { .. } => {
                    undecided += 1;
                    in_field.is_none()
                }
            };
            if !agrees && failures.len() < 5 {
                failures.push(format!("{:?},{} vs {:?},{}: {}", q1, c1, q2, c2, verdict));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures.is_empty(),
        format!(
            "{} pairs: {} equivalent with verified witness, {} not equivalent, {} not decidable over Q; {:.2?}{}",
            pairs,
            witnessed,
            not_equiv,
            undecided,
            elapsed,
            failures.first().map(|f| format!("; first disagreement: {}", f)).unwrap_or_default()
        ),
    )
}

fn last_nonzero_iterate(delta: &Derivation, p: &Polynomial) -> Polynomial {
    let mut current = p.clone();
    loop {
        let next = delta.apply(&current).expect("apply");
        if next.is_zero() {
            return current;
        }
        current = next;
    }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut cert = Certificate::new("random evaluation of the exact identities", serde_json::json!({}));
    let seed = 7;
    // theorem: stable pairs for t - 1, t - 2 and Q_k, then the chains
    for n in 1..=3 {
        let t1 = UnivariatePoly::from_ints(&[-1, 1]);
        let t2 = UnivariatePoly::from_ints(&[-2, 1]);
        let h1 = build_stable_equivalence(&t1, n).expect("pair");
        let h2 = build_stable_equivalence(&t2, n).expect("pair");
        for (label, q, pair) in [("t-1", &t1, &h1), ("t-2", &t2, &h2)] {
            let sub = sz_stable_pair(&pair.phi, &pair.psi, q, seed, SZ_POINTS).expect("sz");
            cert.absorb(&format!("n={} {}", n, label), sub);
        }
        let sig = h1.signature();
        let one = Polynomial::one(sig);
        let f = &pq_polynomial(sig, &t1).expect("P") - &one;
        let g = &pq_polynomial(sig, &t2).expect("P") - &one;
        let lambda = poly_equiv_automorphism_in(sig, &FieldElement::from_int(2)).expect("scale");
        let mut s = PointSampler::new(seed);
        check_chain_maps_to(
            &mut cert,
            format!("n={} Theta(P_(t-1) - 1) = P_(t-2) - 1", n),
            &mut s,
            SZ_POINTS,
            &[&h2.psi, &lambda, &h1.phi],
            &f,
            &g,
        );
        let pairs: Vec<StableEquivPair> =
            (1..=3).map(|k| build_stable_equivalence(&q_k(k), n).expect("pair")).collect();
        for (k, pair) in (1..=3).zip(&pairs) {
            let sub = sz_stable_pair(&pair.phi, &pair.psi, &q_k(k), seed, SZ_POINTS).expect("sz");
            cert.absorb(&format!("n={} Q_{}", n, k), sub);
        }
        let q1 = pq_polynomial(sig, &q_k(1)).expect("P");
        for k in 2..=3u32 {
            let sign = if k % 2 == 0 { -1 } else { 1 };
            let scale = poly_equiv_automorphism_in(sig, &FieldElement::from_int(sign)).expect("scale");
            let qk = pq_polynomial(sig, &q_k(k)).expect("P");
            check_chain_maps_to(
                &mut cert,
                format!("n={} Q_{} -> Q_1", n, k),
                &mut s,
                SZ_POINTS,
                &[&pairs[0].psi, &scale, &pairs[k as usize - 1].phi],
                &qk,
                &q1,
            );
        }
    }
    // fiber isomorphisms
    for (i, spec) in random_specs().iter().enumerate() {
        let sub = sz_fiber_isomorphism(spec, seed + i as u64, SZ_POINTS).expect("sz");
        cert.absorb(&format!("fiber {}", i), sub);
    }
    // derivations
    let multiples = random_multiples();
    for (i, (spec, h)) in multiples.iter().enumerate() {
        let big = build_delta(spec);
        let y = Polynomial::gen(spec.signature(), Var::Y);
        let last = last_nonzero_iterate(&big, &y);
        let delta = big.scaled(h).expect("scaled");
        let sub = sz_derivation(spec, &big, &last, Some((&delta, h)), seed + i as u64, SZ_POINTS);
        cert.absorb(&format!("derivation {}", i), sub);
    }
    // series
    for (n, order) in [(1usize, 8u32), (2, 6)] {
        let psi = biholomorphism(n, order).expect("series");
        cert.absorb(&format!("series n={}", n), sz_series(&psi, n, seed, SZ_POINTS));
        cert.absorb(&format!("series n={} exact", n), verify_biholomorphism(n, order));
    }
    let elapsed = start.elapsed();
    let failed = cert.checks.iter().filter(|c| !c.pass).count();
    outcome(
        cert.passed(),
        format!(
            "{} checks at {} points, {} failed{}, {:.2?}",
            cert.checks.len(),
            SZ_POINTS,
            failed,
            cert.first_failure().map(|c| format!(" (first: {})", c.name)).unwrap_or_default(),
            elapsed
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 theorem certificate for n = 1, 2, 3", criterion_1),
        ("2 fiber isomorphisms on 200 random specs", criterion_2),
        ("3 stable pairs for Q_k and the corrupted control", criterion_3),
        ("4 locally nilpotent derivation", criterion_4),
        ("5 series biholomorphism", criterion_5),
        ("6 equivalence decision against brute force", criterion_6),
        ("7 random evaluation of criteria 1-5", criterion_7),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut all = true;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| name.starts_with(x.as_str())) {
            continue;
        }
        let o = f();
        all &= o.pass;
        println!("{} criterion {}: {}", if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
    }
    if !all {
        std::process::exit(1);
    }
}
