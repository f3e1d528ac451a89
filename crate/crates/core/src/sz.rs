//! Randomized cross-checks: polynomial identities tested by evaluation at
//! random rational points.
//!
//! Compositions are checked pointwise without ever forming the composite, and
//! derivations through dual numbers, so these checks share no code path with
//! the exact symbolic ones beyond polynomial evaluation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certificate::{Basis, Certificate};
use crate::field::FieldElement;
use crate::hypersurface::{fiber_isomorphism, pq_polynomial, PqSpec};
use crate::morphisms::{Derivation, RingEndomorphism};
use crate::poly::{PolyError, Polynomial, RingSignature, UnivariatePoly, Var};
use crate::series::SeriesMap;

pub const DEFAULT_POINTS: usize = 100;
pub const COORD_BOUND: i64 = 10_000;

const SZ_ANCHOR: &str = "random evaluation";

/// Random rationals `a/b` with `|a| <= 10^4` and `1 <= b <= 10^4`.
pub struct PointSampler {
    rng: ChaCha8Rng,
}

impl PointSampler {
    pub fn new(seed: u64) -> Self {
        PointSampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn rational(&mut self) -> FieldElement {
        let num = self.rng.gen_range(-COORD_BOUND..=COORD_BOUND);
        let den = self.rng.gen_range(1..=COORD_BOUND);
        FieldElement::from_ratio(num, den)
    }

    pub fn nonzero_rational(&mut self) -> FieldElement {
        loop {
            let r = self.rational();
            if !r.is_zero() {
                return r;
            }
        }
    }

    pub fn point(&mut self, sig: RingSignature) -> Vec<FieldElement> {
        (0..sig.nvars()).map(|_| self.rational()).collect()
    }

    /// A point of `V(P_q - c)`: random nonzero x, random z (and w), and
    /// `y = (c - z^2 - x^[1] q(z^2)) / x^[2]`.
    pub fn point_on(&mut self, spec: &PqSpec, sig: RingSignature) -> Vec<FieldElement> {
        let mut p = self.point(sig);
        for v in p.iter_mut().take(sig.n()) {
            *v = self.nonzero_rational();
        }
        let u = p[..sig.n()].iter().fold(FieldElement::one(), |a, b| &a * b);
        let z = &p[sig.index(Var::Z).expect("z")];
        let z2 = z * z;
        let num = &(spec.c() - &z2) - &(&u * &spec.q().eval(&z2));
        let y = num.checked_div(&(&u * &u)).expect("x nonzero");
        p[sig.index(Var::Y).expect("y")] = y;
        p
    }
}

fn show(p: &[FieldElement]) -> String {
    let parts: Vec<String> = p.iter().map(|c| c.to_string()).collect();
    format!("({})", parts.join(", "))
}

/// The point `map(p)`: every generator image evaluated at `p`.
pub fn image_point(map: &RingEndomorphism, p: &[FieldElement]) -> Result<Vec<FieldElement>, PolyError> {
    map.images().iter().map(|g| g.evaluate(p)).collect()
}

/// First-order dual numbers `a + b*eps`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dual {
    pub re: FieldElement,
    pub eps: FieldElement,
}

impl Dual {
    fn constant(c: FieldElement) -> Self {
        Dual { re: c, eps: FieldElement::zero() }
    }

    fn mul(&self, o: &Dual) -> Dual {
        Dual {
            re: &self.re * &o.re,
            eps: &(&self.re * &o.eps) + &(&self.eps * &o.re),
        }
    }
}

pub fn evaluate_dual(p: &Polynomial, point: &[Dual]) -> Dual {
    let mut acc = Dual::constant(FieldElement::zero());
    for (m, c) in p.terms() {
        let mut t = Dual::constant(c.clone());
        for (x, &e) in point.iter().zip(m.exponents()) {
            for _ in 0..e {
                t = t.mul(x);
            }
        }
        acc.re = &acc.re + &t.re;
        acc.eps = &acc.eps + &t.eps;
    }
    acc
}

/// `delta(f)` at `p`, as the derivative of `f` along the vector `delta(p)`.
pub fn derivation_value(
    delta: &Derivation,
    f: &Polynomial,
    p: &[FieldElement],
) -> Result<FieldElement, PolyError> {
    let dir: Vec<FieldElement> = delta
        .images()
        .iter()
        .map(|g| g.evaluate(p))
        .collect::<Result<_, _>>()?;
    let point: Vec<Dual> = p
        .iter()
        .zip(dir)
        .map(|(a, b)| Dual { re: a.clone(), eps: b })
        .collect();
    Ok(evaluate_dual(f, &point).eps)
}

/// Runs `residual` at `count` points and records one randomized check; the
/// first nonzero value or error fails it.
pub fn check_points(
    cert: &mut Certificate,
    name: impl Into<String>,
    count: usize,
    mut next_point: impl FnMut() -> Vec<FieldElement>,
    mut residual: impl FnMut(&[FieldElement]) -> Result<FieldElement, PolyError>,
) {
    let mut detail = None;
    for _ in 0..count {
        let p = next_point();
        match residual(&p) {
            Ok(r) if r.is_zero() => {}
            Ok(r) => {
                detail = Some(format!("residual {} at {}", r, show(&p)));
                break;
            }
            Err(e) => {
                detail = Some(format!("error {} at {}", e, show(&p)));
                break;
            }
        }
    }
    let name = format!("{} [{} points]", name.into(), count);
    cert.check(name, SZ_ANCHOR, Basis::Randomized, detail.is_none(), detail);
}

/// `map(f) = g` pointwise: `f(map(p)) = g(p)`.
pub fn check_maps_to(
    cert: &mut Certificate,
    name: impl Into<String>,
    sampler: &mut PointSampler,
    count: usize,
    map: &RingEndomorphism,
    f: &Polynomial,
    g: &Polynomial,
) {
    let sig = map.signature();
    check_points(cert, name, count, || sampler.point(sig), |p| {
        Ok(&f.evaluate(&image_point(map, p)?)? - &g.evaluate(p)?)
    });
}

/// `f(chain(p)) - g(p)` where the point passes through `maps[0]` first.
fn chain_residual(
    maps: &[&RingEndomorphism],
    f: &Polynomial,
    g: &Polynomial,
    p: &[FieldElement],
) -> Result<FieldElement, PolyError> {
    let mut x = p.to_vec();
    for map in maps {
        x = image_point(map, &x)?;
    }
    Ok(&f.evaluate(&x)? - &g.evaluate(p)?)
}

/// `outer(inner(v)) = v` for every generator `v`, at points produced by
/// `next_point`. The point passes through `outer` first, then `inner`.
pub fn check_inverse_on(
    cert: &mut Certificate,
    name: &str,
    count: usize,
    mut next_point: impl FnMut() -> Vec<FieldElement>,
    outer: &RingEndomorphism,
    inner: &RingEndomorphism,
) {
    let sig = outer.signature();
    let points: Vec<Vec<FieldElement>> = (0..count).map(|_| next_point()).collect();
    for v in sig.vars() {
        let gen = Polynomial::gen(sig, v);
        let image = inner.image(v).expect("generator");
        let mut it = points.iter().cloned();
        check_points(
            cert,
            format!("{}({})) = {}", name, v, v),
            count,
            || it.next().expect("enough points"),
            |p| chain_residual(&[outer], image, &gen, p),
        );
    }
}

/// The stable-equivalence identities of `(phi, psi)` at random points.
pub fn sz_stable_pair(
    phi: &RingEndomorphism,
    psi: &RingEndomorphism,
    q: &UnivariatePoly,
    seed: u64,
    count: usize,
) -> Result<Certificate, PolyError> {
    let sig = phi.signature();
    let mut s = PointSampler::new(seed);
    let mut cert = Certificate::new(
        format!("random evaluation of the stable pair for q(t) = {}", q),
        serde_json::json!({ "n": sig.n(), "q": q, "seed": seed, "points": count }),
    );
    let pq = pq_polynomial(sig, q)?;
    let p0 = pq_polynomial(sig, &UnivariatePoly::constant(q.coeff(0)))?;
    check_maps_to(&mut cert, "Phi(P_q) = P_(q(0))", &mut s, count, phi, &pq, &p0);
    check_maps_to(&mut cert, "Psi(P_(q(0))) = P_q", &mut s, count, psi, &p0, &pq);
    check_inverse_on(&mut cert, "Phi(Psi", count, || s.point(sig), phi, psi);
    check_inverse_on(&mut cert, "Psi(Phi", count, || s.point(sig), psi, phi);
    Ok(cert)
}

/// The fiber-isomorphism identities at random points, the inverse checks on
/// random points of the two hypersurfaces.
pub fn sz_fiber_isomorphism(spec: &PqSpec, seed: u64, count: usize) -> Result<Certificate, PolyError> {
    let sig = spec.signature();
    let target = spec.constant_reduction();
    let (phi, psi) = fiber_isomorphism(spec);
    let mut s = PointSampler::new(seed);
    let mut cert = Certificate::new(
        format!("random evaluation of the fiber isomorphism for {}", spec),
        serde_json::json!({ "spec": spec.to_json(), "seed": seed, "points": count }),
    );
    let g = spec.q().difference_quotient(spec.c());
    let rel = spec.relation();
    let trel = target.relation();
    check_points(
        &mut cert,
        "phi(P_q - c) = (1 + x^[1] g(z^2)) (P_(q(c)) - c)",
        count,
        || s.point(sig),
        |p| {
            let u = p[..sig.n()].iter().fold(FieldElement::one(), |a, b| &a * b);
            let z = &p[sig.index(Var::Z).expect("z")];
            let unit = &FieldElement::one() + &(&u * &g.eval(&(z * z)));
            Ok(&rel.evaluate(&image_point(&phi, p)?)? - &(&unit * &trel.evaluate(p)?))
        },
    );
    check_points(&mut cert, "psi(P_(q(c)) - c) vanishes on V(P_q - c)", count, || s.point_on(spec, sig), |p| {
        trel.evaluate(&image_point(&psi, p)?)
    });
    let mut s2 = PointSampler::new(seed.wrapping_add(1));
    check_inverse_on(&mut cert, "psi(phi", count, || s2.point_on(spec, sig), &psi, &phi);
    let mut s3 = PointSampler::new(seed.wrapping_add(2));
    check_inverse_on(&mut cert, "phi(psi", count, || s3.point_on(&target, sig), &phi, &psi);
    Ok(cert)
}

/// `Delta(P_q - c) = 0`, `Delta^m(y) = 0` given `Delta^(m-1)(y)`, and
/// `delta = h*Delta` on `V(P_q - c)`.
pub fn sz_derivation(
    spec: &PqSpec,
    delta_big: &Derivation,
    last_nonzero_iterate: &Polynomial,
    multiple: Option<(&Derivation, &Polynomial)>,
    seed: u64,
    count: usize,
) -> Certificate {
    let sig = spec.signature();
    let mut s = PointSampler::new(seed);
    let mut cert = Certificate::new(
        format!("random evaluation of Delta for {}", spec),
        serde_json::json!({ "spec": spec.to_json(), "seed": seed, "points": count }),
    );
    let rel = spec.relation();
    check_points(&mut cert, "Delta(P_q - c) = 0", count, || s.point(sig), |p| {
        derivation_value(delta_big, &rel, p)
    });
    check_points(&mut cert, "Delta kills the last nonzero iterate on y", count, || s.point(sig), |p| {
        derivation_value(delta_big, last_nonzero_iterate, p)
    });
    if let Some((delta, h)) = multiple {
        for v in sig.vars() {
            let f = Polynomial::gen(sig, v);
            check_points(&mut cert, format!("delta({}) = h Delta({}) on V", v, v), count, || s.point_on(spec, sig), |p| {
                let lhs = derivation_value(delta, &f, p)?;
                let rhs = &h.evaluate(p)? * &derivation_value(delta_big, &f, p)?;
                Ok(&lhs - &rhs)
            });
        }
    }
    cert
}

/// `Theta(f) = g` where `Theta` is given as the chain `maps[0]` after
/// `maps[1]` after ...; the point passes through `maps[0]` first.
pub fn check_chain_maps_to(
    cert: &mut Certificate,
    name: impl Into<String>,
    sampler: &mut PointSampler,
    count: usize,
    maps: &[&RingEndomorphism],
    f: &Polynomial,
    g: &Polynomial,
) {
    let sig = f.signature();
    check_points(cert, name, count, || sampler.point(sig), |p| chain_residual(maps, f, g, p));
}

/// Truncated univariate series in `t` with rational coefficients.
fn t_mul(a: &[FieldElement], b: &[FieldElement], len: usize) -> Vec<FieldElement> {
    let mut out = vec![FieldElement::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] = &out[i + j] + &(x * y);
        }
    }
    out
}

/// `exp(s * A t^n)` through `t^order`, from the exponential coefficients.
fn t_exp(a: &FieldElement, n: usize, order: usize) -> Vec<FieldElement> {
    let mut out = vec![FieldElement::zero(); order + 1];
    let mut coeff = FieldElement::one();
    let mut j = 0usize;
    while j * n <= order {
        out[j * n] = coeff.clone();
        j += 1;
        coeff = &(&coeff * a) * &FieldElement::from_ratio(1, j as i64);
    }
    out
}

/// Restriction of a series polynomial to the line `x = a t`, `y = y0`,
/// `z = z0`, as coefficients of `t^0 .. t^order`.
fn on_line(p: &Polynomial, a: &[FieldElement], y0: &FieldElement, z0: &FieldElement, order: usize) -> Vec<FieldElement> {
    let sig = p.signature();
    let n = sig.n();
    let mut out = vec![FieldElement::zero(); order + 1];
    let yi = sig.index(Var::Y).expect("y");
    let zi = sig.index(Var::Z).expect("z");
    for (m, c) in p.terms() {
        let e = m.exponents();
        let d: u32 = e[..n].iter().sum();
        if d as usize > order {
            continue;
        }
        let mut v = c.clone();
        for i in 0..n {
            v = &v * &a[i].pow(e[i] as i64).expect("power");
        }
        v = &v * &y0.pow(e[yi] as i64).expect("power");
        v = &v * &z0.pow(e[zi] as i64).expect("power");
        out[d as usize] = &out[d as usize] + &v;
    }
    out
}

/// On random lines `x = a t`, compares the series map with independently
/// generated one-variable series, and checks the identity
/// `Psi(x^[2]y + z^2 + x^[1] - 1) = exp(-x^[1]) (x^[2]y + z^2 - 1)` through `t^order`.
pub fn sz_series(psi: &SeriesMap, n: usize, seed: u64, count: usize) -> Certificate {
    let order = psi.order() as usize;
    let mut s = PointSampler::new(seed);
    let mut cert = Certificate::new(
        format!("random lines through the series identity, n = {}, order {}", n, order),
        serde_json::json!({ "n": n, "order": order, "seed": seed, "points": count }),
    );
    let lines: Vec<Vec<FieldElement>> = (0..count).map(|_| (0..n + 2).map(|_| s.rational()).collect()).collect();
    let setup = |p: &[FieldElement]| {
        let a = p[..n].to_vec();
        let big_a = a.iter().fold(FieldElement::one(), |x, y| &x * y);
        let e = t_exp(&-&big_a, n, order);
        let half = t_exp(&(&big_a * &FieldElement::from_ratio(-1, 2)), n, order);
        // (exp(-u) - 1 + u)/u^2 = sum_(j >= 2) (-1)^j A^(j-2) t^(n(j-2)) / j!
        let mut tail = vec![FieldElement::zero(); order + 1];
        let mut coeff = FieldElement::from_ratio(1, 2);
        let mut j = 2usize;
        while n * (j - 2) <= order {
            tail[n * (j - 2)] = coeff.clone();
            j += 1;
            coeff = &(&coeff * &-&big_a) * &FieldElement::from_ratio(1, j as i64);
        }
        (a, big_a, e, half, tail)
    };
    let mut it = lines.iter();
    check_points(&mut cert, "Psi(y), Psi(z) agree with one-variable series on the line", count, || it.next().expect("line").clone(), |p| {
        let (a, _, e, half, tail) = setup(p);
        let (y0, z0) = (&p[n], &p[n + 1]);
        let py = on_line(psi.y.polynomial(), &a, y0, z0, order);
        let pz = on_line(psi.z.polynomial(), &a, y0, z0, order);
        for k in 0..=order {
            let ey = &(&e[k] * y0) - &tail[k];
            let ez = &half[k] * z0;
            for d in [&py[k] - &ey, &pz[k] - &ez] {
                if !d.is_zero() {
                    return Ok(d);
                }
            }
        }
        Ok(FieldElement::zero())
    });
    let mut it = lines.iter();
    check_points(&mut cert, "identity through t^order on the line", count, || it.next().expect("line").clone(), |p| {
        let (a, big_a, e, _, _) = setup(p);
        let (y0, z0) = (&p[n], &p[n + 1]);
        let py = on_line(psi.y.polynomial(), &a, y0, z0, order);
        let pz = on_line(psi.z.polynomial(), &a, y0, z0, order);
        // u = A t^n, u^2 = A^2 t^(2n)
        let mut u = vec![FieldElement::zero(); order + 1];
        if n <= order {
            u[n] = big_a.clone();
        }
        let u2 = t_mul(&u, &u, order + 1);
        let mut lhs = t_mul(&u2, &py, order + 1);
        let z2 = t_mul(&pz, &pz, order + 1);
        for k in 0..=order {
            lhs[k] = &(&lhs[k] + &z2[k]) + &u[k];
        }
        lhs[0] = &lhs[0] - &FieldElement::one();
        let mut base = u2.iter().map(|c| c * y0).collect::<Vec<_>>();
        base[0] = &(&base[0] + &(z0 * z0)) - &FieldElement::one();
        let rhs = t_mul(&e, &base, order + 1);
        for k in 0..=order {
            let d = &lhs[k] - &rhs[k];
            if !d.is_zero() {
                return Ok(d);
            }
        }
        Ok(FieldElement::zero())
    });
    cert
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivalence::build_stable_equivalence;
    use crate::morphisms::build_delta;
    use crate::series::biholomorphism;
    use num_traits::Signed;

    fn spec(n: usize, q: &[i64], c: i64) -> PqSpec {
        PqSpec::new(n, UnivariatePoly::from_ints(q), FieldElement::from_int(c)).unwrap()
    }

    #[test]
    fn sampler_is_deterministic_and_bounded() {
        let mut a = PointSampler::new(7);
        let mut b = PointSampler::new(7);
        for _ in 0..50 {
            let x = a.rational();
            assert_eq!(x, b.rational());
            let r = x.as_rational().unwrap();
            assert!(r.numer().abs() <= COORD_BOUND.into());
            assert!(*r.denom() <= COORD_BOUND.into());
        }
    }

    #[test]
    fn points_lie_on_the_hypersurface() {
        let sp = spec(2, &[-1, 0, 3], 2);
        let mut s = PointSampler::new(1);
        for _ in 0..20 {
            let p = s.point_on(&sp, sp.signature());
            assert!(sp.relation().evaluate(&p).unwrap().is_zero());
        }
    }

    #[test]
    fn dual_numbers_differentiate() {
        let sig = RingSignature::new(1, false).unwrap();
        let f = Polynomial::parse("x1^2*y + z^3", sig).unwrap();
        let d = Derivation::from_images(sig, &[(Var::Z, Polynomial::one(sig))]).unwrap();
        let p: Vec<FieldElement> = [2, 5, 3].iter().map(|&v| FieldElement::from_int(v)).collect();
        assert_eq!(derivation_value(&d, &f, &p).unwrap(), FieldElement::from_int(27));
    }

    #[test]
    fn stable_pair_passes_and_corruption_fails() {
        let q = UnivariatePoly::from_ints(&[1, -2, 1]);
        let pair = build_stable_equivalence(&q, 1).unwrap();
        let cert = sz_stable_pair(&pair.phi, &pair.psi, &q, 3, 20).unwrap();
        assert!(cert.passed(), "{}", cert.render_text());
        let sig = pair.signature();
        let bad_w = pair.phi.image(Var::W).unwrap() + &Polynomial::parse("x1*z", sig).unwrap();
        let bad = pair.phi.clone().with_image(Var::W, bad_w).unwrap();
        let cert = sz_stable_pair(&bad, &pair.psi, &q, 3, 20).unwrap();
        assert!(!cert.passed());
    }

    #[test]
    fn composite_check_names_the_bad_generator() {
        let q = UnivariatePoly::from_ints(&[-1, 1]);
        let pair = build_stable_equivalence(&q, 2).unwrap();
        let sig = pair.signature();
        let bad_w = pair.phi.image(Var::W).unwrap() + &Polynomial::parse("x1^3*x2", sig).unwrap();
        let bad = pair.phi.clone().with_image(Var::W, bad_w).unwrap();
        let mut cert = Certificate::new("control", serde_json::json!({}));
        let mut s = PointSampler::new(1);
        check_inverse_on(&mut cert, "Psi(Phi", 10, || s.point(sig), &pair.psi, &bad);
        let failed: Vec<&str> = cert.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        assert_eq!(failed, vec!["Psi(Phi(w)) = w [10 points]"]);
    }

    #[test]
    fn fiber_isomorphism_passes() {
        for sp in [spec(1, &[-2, 1], 1), spec(2, &[3, 0, -1, 2], -1), spec(3, &[0, 1], 0)] {
            let cert = sz_fiber_isomorphism(&sp, 5, 20).unwrap();
            assert!(cert.passed(), "{}", cert.render_text());
        }
    }

    #[test]
    fn derivation_checks() {
        let sp = spec(1, &[-1, 1], 1);
        let delta = build_delta(&sp);
        let y = Polynomial::gen(sp.signature(), Var::Y);
        let iter2 = delta.apply(&delta.apply(&y).unwrap()).unwrap();
        // Delta^3(y) = 0 for deg q = 1, so Delta^2(y) is the last nonzero iterate
        assert!(!iter2.is_zero());
        let h = Polynomial::parse("x1 + 2", sp.signature()).unwrap();
        let scaled = delta.scaled(&h).unwrap();
        let cert = sz_derivation(&sp, &delta, &iter2, Some((&scaled, &h)), 9, 20);
        assert!(cert.passed(), "{}", cert.render_text());
        let cert = sz_derivation(&sp, &delta, &delta.apply(&y).unwrap(), None, 9, 20);
        assert!(!cert.passed());
    }

    #[test]
    fn series_lines() {
        for (n, order) in [(1, 8), (2, 6)] {
            let psi = biholomorphism(n, order).unwrap();
            let cert = sz_series(&psi, n, 11, 20);
            assert!(cert.passed(), "{}", cert.render_text());
        }
        let mut psi = biholomorphism(1, 8).unwrap();
        psi.z = psi.z.scale(&FieldElement::from_int(2));
        assert!(!sz_series(&psi, 1, 11, 5).passed());
    }
}
