//! Sparse multivariate polynomials over [`FieldElement`] in the variables
//! `x1..xn, y, z` and optionally the cylinder variable `w`.
//!
//! Terms live in a `BTreeMap` keyed by exponent vectors under graded
//! lexicographic order with `x1 < x2 < ... < xn < y < z < w`, so equality is
//! structural and printing is deterministic.

mod parse;
mod reduce;
mod univariate;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use smallvec::SmallVec;
use thiserror::Error;

use crate::field::{FieldElement, FieldError, Rational};

pub use parse::ParseError;
pub use reduce::{reduce_mod_relation, reduce_mod_relation_counted};
pub use univariate::UnivariatePoly;

pub const DEFAULT_TERM_LIMIT: usize = 1_000_000;
pub const TERM_LIMIT_ENV: &str = "STABLY_DISTINCT_TERM_LIMIT";

static TERM_LIMIT: AtomicUsize = AtomicUsize::new(0);

thread_local! {
    static SCOPED_LIMIT: std::cell::Cell<Option<usize>> = const { std::cell::Cell::new(None) };
}

/// Maximum number of terms any single polynomial operation may produce.
/// Read once from `STABLY_DISTINCT_TERM_LIMIT`, defaulting to 10^6.
pub fn term_limit() -> usize {
    if let Some(l) = SCOPED_LIMIT.with(|c| c.get()) {
        return l;
    }
    let v = TERM_LIMIT.load(AtomicOrdering::Relaxed);
    if v != 0 {
        return v;
    }
    let limit = std::env::var(TERM_LIMIT_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&l| l > 0)
        .unwrap_or(DEFAULT_TERM_LIMIT);
    TERM_LIMIT.store(limit, AtomicOrdering::Relaxed);
    limit
}

pub fn set_term_limit(limit: usize) {
    TERM_LIMIT.store(limit.max(1), AtomicOrdering::Relaxed);
}

/// Runs `f` with a term limit that applies to the current thread only.
pub fn with_term_limit<T>(limit: usize, f: impl FnOnce() -> T) -> T {
    let prev = SCOPED_LIMIT.with(|c| c.replace(Some(limit.max(1))));
    let out = f();
    SCOPED_LIMIT.with(|c| c.set(prev));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("signature mismatch: {0} vs {1}")]
    SignatureMismatch(RingSignature, RingSignature),
    #[error("variable {0} is not in the ring")]
    UnknownVariable(String),
    #[error("point has {got} coordinates, the ring has {expected} variables")]
    PointLength { expected: usize, got: usize },
    #[error("no value given for {0}")]
    MissingCoordinate(Var),
    #[error("not divisible")]
    NotDivisible,
    #[error("division by the zero polynomial")]
    DivisionByZeroPolynomial,
    #[error("term limit exceeded: {terms} terms > {limit}")]
    ResourceLimit { terms: usize, limit: usize },
    #[error("the ring needs at least one x variable")]
    EmptySignature,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A generator of the ambient ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    /// `x_i`, 1-based.
    X(usize),
    Y,
    Z,
    W,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{}", i),
            Var::Y => write!(f, "y"),
            Var::Z => write!(f, "z"),
            Var::W => write!(f, "w"),
        }
    }
}

impl FromStr for Var {
    type Err = PolyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "y" => Ok(Var::Y),
            "z" => Ok(Var::Z),
            "w" => Ok(Var::W),
            _ => s
                .strip_prefix('x')
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|&i| i >= 1)
                .map(Var::X)
                .ok_or_else(|| PolyError::UnknownVariable(s.to_string())),
        }
    }
}

/// `C[x1..xn, y, z]` or `C[x1..xn, y, z, w]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RingSignature {
    n: usize,
    has_w: bool,
}

impl RingSignature {
    pub fn new(n: usize, has_w: bool) -> Result<Self, PolyError> {
        if n == 0 {
            return Err(PolyError::EmptySignature);
        }
        Ok(RingSignature { n, has_w })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_w(&self) -> bool {
        self.has_w
    }

    pub fn with_w(self) -> Self {
        RingSignature { has_w: true, ..self }
    }

    pub fn without_w(self) -> Self {
        RingSignature { has_w: false, ..self }
    }

    pub fn nvars(&self) -> usize {
        self.n + 2 + usize::from(self.has_w)
    }

    pub fn index(&self, v: Var) -> Option<usize> {
        match v {
            Var::X(i) if (1..=self.n).contains(&i) => Some(i - 1),
            Var::X(_) => None,
            Var::Y => Some(self.n),
            Var::Z => Some(self.n + 1),
            Var::W if self.has_w => Some(self.n + 2),
            Var::W => None,
        }
    }

    pub fn var(&self, idx: usize) -> Var {
        assert!(idx < self.nvars(), "variable index out of range");
        if idx < self.n {
            Var::X(idx + 1)
        } else if idx == self.n {
            Var::Y
        } else if idx == self.n + 1 {
            Var::Z
        } else {
            Var::W
        }
    }

    /// Generators in ring order.
    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        (0..self.nvars()).map(move |i| self.var(i))
    }

    fn require(&self, v: Var) -> Result<usize, PolyError> {
        self.index(v)
            .ok_or_else(|| PolyError::UnknownVariable(v.to_string()))
    }
}

impl fmt::Display for RingSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q[x1..x{}, y, z{}]", self.n, if self.has_w { ", w" } else { "" })
    }
}

/// Exponent vector, one entry per ring variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(SmallVec<[u32; 8]>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(SmallVec::from_elem(0, nvars))
    }

    pub fn from_exponents(exps: &[u32]) -> Self {
        Monomial(SmallVec::from_slice(exps))
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect())
    }

    /// `self / other`, assuming `other` divides `self`.
    fn div(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(other.0.iter()).map(|(a, b)| a - b).collect())
    }
}

impl Ord for Monomial {
    // grlex, comparing the largest variable (last index) first
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.iter().rev().cmp(other.0.iter().rev()))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    sig: RingSignature,
    terms: BTreeMap<Monomial, FieldElement>,
}

impl Polynomial {
    pub fn zero(sig: RingSignature) -> Self {
        Polynomial {
            sig,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(sig: RingSignature, c: FieldElement) -> Self {
        let mut p = Polynomial::zero(sig);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(sig.nvars()), c);
        }
        p
    }

    pub fn one(sig: RingSignature) -> Self {
        Polynomial::constant(sig, FieldElement::one())
    }

    pub fn var(sig: RingSignature, v: Var) -> Result<Self, PolyError> {
        let idx = sig.require(v)?;
        let mut m = Monomial::one(sig.nvars());
        m.0[idx] = 1;
        Ok(Polynomial::term(sig, m, FieldElement::one()))
    }

    /// Panicking shorthand for generators known to be in the ring.
    pub fn gen(sig: RingSignature, v: Var) -> Self {
        Polynomial::var(sig, v).expect("generator in signature")
    }

    pub fn term(sig: RingSignature, m: Monomial, c: FieldElement) -> Self {
        assert_eq!(m.0.len(), sig.nvars(), "monomial length must match signature");
        let mut p = Polynomial::zero(sig);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    /// `x1^k * ... * xn^k`.
    pub fn x_power_bracket(sig: RingSignature, k: u32) -> Self {
        let mut m = Monomial::one(sig.nvars());
        for e in m.0.iter_mut().take(sig.n) {
            *e = k;
        }
        Polynomial::term(sig, m, FieldElement::one())
    }

    pub fn from_terms(
        sig: RingSignature,
        terms: impl IntoIterator<Item = (Monomial, FieldElement)>,
    ) -> Self {
        let mut p = Polynomial::zero(sig);
        for (m, c) in terms {
            p.add_term(m, &c);
        }
        p
    }

    pub fn signature(&self) -> RingSignature {
        self.sig
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending grlex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &FieldElement)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> FieldElement {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &FieldElement)> {
        self.terms.iter().next_back()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    pub fn constant_term(&self) -> FieldElement {
        self.coefficient(&Monomial::one(self.sig.nvars()))
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        match self.sig.index(v) {
            Some(i) => self.terms.keys().map(|m| m.0[i]).max().unwrap_or(0),
            None => 0,
        }
    }

    /// Total degree in the x-variables of one monomial.
    pub fn x_degree_of(&self, m: &Monomial) -> u32 {
        m.0[..self.sig.n].iter().sum()
    }

    /// Smallest total x-degree over all terms (`None` for zero).
    pub fn min_x_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| self.x_degree_of(m)).min()
    }

    /// True when only x-variables occur.
    pub fn is_in_x_subring(&self) -> bool {
        self.terms
            .keys()
            .all(|m| m.0[self.sig.n..].iter().all(|&e| e == 0))
    }

    pub fn map_coefficients(&self, f: impl Fn(&FieldElement) -> FieldElement) -> Self {
        Polynomial::from_terms(self.sig, self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    pub fn scale(&self, c: &FieldElement) -> Self {
        if c.is_zero() {
            return Polynomial::zero(self.sig);
        }
        self.map_coefficients(|x| x * c)
    }

    fn add_term(&mut self, m: Monomial, c: &FieldElement) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c.clone());
            }
            Entry::Occupied(mut e) => {
                e.get_mut().add_assign_ref(c);
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn check_sig(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.sig != other.sig {
            Err(PolyError::SignatureMismatch(self.sig, other.sig))
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_sig(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_sig(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), &-c);
        }
        Ok(out)
    }

    /// `self * c * m` for a single term.
    fn mul_term(&self, m: &Monomial, c: &FieldElement) -> Polynomial {
        let mut out = Polynomial::zero(self.sig);
        if c.is_zero() {
            return out;
        }
        out.terms = self
            .terms
            .iter()
            .map(|(mm, cc)| (mm.mul(m), cc * c))
            .filter(|(_, cc)| !cc.is_zero())
            .collect();
        out
    }

    pub fn try_mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_sig(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Polynomial::zero(self.sig));
        }
        if other.terms.len() == 1 {
            let (m, c) = other.terms.iter().next().expect("one term");
            return Ok(self.mul_term(m, c));
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().expect("one term");
            return Ok(other.mul_term(m, c));
        }
        let limit = term_limit();
        let (small, large) = if self.terms.len() <= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = Polynomial::zero(self.sig);
        for (m1, c1) in &small.terms {
            for (m2, c2) in &large.terms {
                out.add_term(m1.mul(m2), &(c1 * c2));
            }
            if out.terms.len() > limit {
                return Err(PolyError::ResourceLimit {
                    terms: out.terms.len(),
                    limit,
                });
            }
        }
        Ok(out)
    }

    pub fn try_pow(&self, exp: u32) -> Result<Polynomial, PolyError> {
        let mut acc = Polynomial::one(self.sig);
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.try_mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.try_mul(&base)?;
            }
        }
        Ok(acc)
    }

    pub fn pow(&self, exp: u32) -> Polynomial {
        self.try_pow(exp).unwrap_or_else(|e| panic!("{}", e))
    }

    pub fn partial_derivative(&self, v: Var) -> Result<Polynomial, PolyError> {
        let idx = self.sig.require(v)?;
        let mut out = Polynomial::zero(self.sig);
        for (m, c) in &self.terms {
            let e = m.0[idx];
            if e == 0 {
                continue;
            }
            let mut dm = m.clone();
            dm.0[idx] -= 1;
            out.add_term(dm, &(c * FieldElement::from_int(i64::from(e))));
        }
        Ok(out)
    }

    /// Image under the ring map sending the `i`-th generator to `images[i]`.
    /// All images must share one signature, which becomes the result's.
    pub fn substitute(&self, images: &[Polynomial]) -> Result<Polynomial, PolyError> {
        if images.len() != self.sig.nvars() {
            return Err(PolyError::SignatureMismatch(
                self.sig,
                images.first().map(|p| p.sig).unwrap_or(self.sig),
            ));
        }
        let target = images[0].sig;
        for img in images {
            if img.sig != target {
                return Err(PolyError::SignatureMismatch(target, img.sig));
            }
        }
        // Group by monomial-image variables first: multiplying by their
        // powers is a cheap shift.
        let mut order: Vec<usize> = (0..images.len()).collect();
        order.sort_by_key(|&i| (images[i].num_terms() > 1, i));
        let mut powers: Vec<Vec<Polynomial>> = images
            .iter()
            .map(|img| vec![Polynomial::one(target), img.clone()])
            .collect();
        let terms: Vec<(&Monomial, &FieldElement)> = self.terms.iter().collect();
        let out = subst_rec(&terms, &order, 0, images, &mut powers, target)?;
        let limit = term_limit();
        if out.num_terms() > limit {
            return Err(PolyError::ResourceLimit {
                terms: out.num_terms(),
                limit,
            });
        }
        Ok(out)
    }

    /// Substitution given as a partial map; unmapped generators are fixed.
    /// The images must live in this polynomial's signature.
    pub fn substitute_vars(&self, map: &[(Var, Polynomial)]) -> Result<Polynomial, PolyError> {
        let mut images: Vec<Polynomial> =
            self.sig.vars().map(|v| Polynomial::gen(self.sig, v)).collect();
        for (v, img) in map {
            let idx = self.sig.require(*v)?;
            self.check_sig(img)?;
            images[idx] = img.clone();
        }
        self.substitute(&images)
    }

    /// Exact evaluation at a point given as `(variable, value)` pairs, which
    /// must assign every generator.
    pub fn evaluate_named(&self, point: &[(Var, FieldElement)]) -> Result<FieldElement, PolyError> {
        let mut coords = vec![None; self.sig.nvars()];
        for (v, a) in point {
            let i = self
                .sig
                .index(*v)
                .ok_or_else(|| PolyError::UnknownVariable(v.to_string()))?;
            coords[i] = Some(a.clone());
        }
        let coords = coords
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or(PolyError::MissingCoordinate(self.sig.var(i))))
            .collect::<Result<Vec<_>, _>>()?;
        self.evaluate(&coords)
    }

    /// Exact evaluation at a point with one coordinate per generator.
    pub fn evaluate(&self, point: &[FieldElement]) -> Result<FieldElement, PolyError> {
        if point.len() != self.sig.nvars() {
            return Err(PolyError::PointLength { expected: self.sig.nvars(), got: point.len() });
        }
        let mut max_exp = vec![0u32; point.len()];
        for m in self.terms.keys() {
            for (mx, &e) in max_exp.iter_mut().zip(m.0.iter()) {
                *mx = (*mx).max(e);
            }
        }
        if let Some(v) = self.evaluate_over_common_denominator(point, &max_exp) {
            return Ok(v);
        }
        let mut powers: Vec<Vec<FieldElement>> = Vec::with_capacity(point.len());
        for (x, &mx) in point.iter().zip(&max_exp) {
            let mut ps = Vec::with_capacity(mx as usize + 1);
            ps.push(FieldElement::one());
            for k in 1..=mx as usize {
                let next = ps[k - 1].checked_mul(x)?;
                ps.push(next);
            }
            powers.push(ps);
        }
        let mut acc = FieldElement::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t = t.checked_mul(&powers[i][e as usize])?;
                }
            }
            acc = acc.checked_add(&t)?;
        }
        Ok(acc)
    }

    /// Rational evaluation with a single division: with `x_i = a_i / b_i`
    /// and `D` the lcm of the coefficient denominators, the value is
    /// `sum D*c * prod a_i^e_i b_i^(max_i - e_i)` over `D * prod b_i^max_i`.
    /// `None` when the point or a coefficient is irrational.
    fn evaluate_over_common_denominator(
        &self,
        point: &[FieldElement],
        max_exp: &[u32],
    ) -> Option<FieldElement> {
        let coords: Vec<&Rational> = point.iter().map(|x| x.as_rational()).collect::<Option<_>>()?;
        let coeffs: Vec<&Rational> = self.terms.values().map(|c| c.as_rational()).collect::<Option<_>>()?;
        let lcm = coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let mut table: Vec<Vec<BigInt>> = Vec::with_capacity(coords.len());
        let mut den = lcm.clone();
        for (x, &mx) in coords.iter().zip(max_exp) {
            let mut num_pows = vec![BigInt::one()];
            let mut den_pows = vec![BigInt::one()];
            for k in 1..=mx as usize {
                num_pows.push(&num_pows[k - 1] * x.numer());
                den_pows.push(&den_pows[k - 1] * x.denom());
            }
            den *= &den_pows[mx as usize];
            table.push(
                (0..=mx as usize)
                    .map(|e| &num_pows[e] * &den_pows[mx as usize - e])
                    .collect(),
            );
        }
        let mut acc = BigInt::zero();
        for (m, c) in self.terms.keys().zip(coeffs) {
            let mut t = c.numer() * (&lcm / c.denom());
            for (i, &e) in m.0.iter().enumerate() {
                if max_exp[i] > 0 {
                    t *= &table[i][e as usize];
                }
            }
            acc += t;
        }
        Some(FieldElement::from(Rational::new(acc, den)))
    }

    /// Quotient `h` with `self = d * h`, or `NotDivisible`.
    pub fn exact_divide(&self, d: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_sig(d)?;
        let (lm, lc) = match d.leading_term() {
            Some((m, c)) => (m.clone(), c.clone()),
            None => return Err(PolyError::DivisionByZeroPolynomial),
        };
        if d.terms.len() == 1 {
            let inv = lc.checked_inv()?;
            let mut out = Polynomial::zero(self.sig);
            for (m, c) in &self.terms {
                if !lm.divides(m) {
                    return Err(PolyError::NotDivisible);
                }
                out.terms.insert(m.div(&lm), c * &inv);
            }
            return Ok(out);
        }
        let inv = lc.checked_inv()?;
        let mut rem = self.clone();
        let mut quot = Polynomial::zero(self.sig);
        while let Some((m, c)) = rem.leading_term() {
            if !lm.divides(m) {
                return Err(PolyError::NotDivisible);
            }
            let qm = m.div(&lm);
            let qc = c * &inv;
            for (dm, dc) in &d.terms {
                rem.add_term(dm.mul(&qm), &-(dc * &qc));
            }
            quot.add_term(qm, &qc);
        }
        Ok(quot)
    }

    /// Re-embeds into a signature with the same `n` (adding or dropping `w`).
    /// Fails if a dropped variable occurs.
    pub fn embed(&self, sig: RingSignature) -> Result<Polynomial, PolyError> {
        if sig.n != self.sig.n {
            return Err(PolyError::SignatureMismatch(self.sig, sig));
        }
        if sig == self.sig {
            return Ok(self.clone());
        }
        let mut out = Polynomial::zero(sig);
        for (m, c) in &self.terms {
            let mut e: SmallVec<[u32; 8]> = m.0.iter().take(sig.n + 2).copied().collect();
            if self.sig.has_w && m.0[sig.n + 2] != 0 {
                return Err(PolyError::UnknownVariable(Var::W.to_string()));
            }
            if sig.has_w {
                e.push(0);
            }
            out.terms.insert(Monomial(e), c.clone());
        }
        Ok(out)
    }

    /// Parses polynomial text in the given ring.
    pub fn parse(text: &str, sig: RingSignature) -> Result<Polynomial, PolyError> {
        parse::parse_polynomial(text, sig).map_err(PolyError::from)
    }
}

fn subst_rec(
    terms: &[(&Monomial, &FieldElement)],
    order: &[usize],
    level: usize,
    images: &[Polynomial],
    powers: &mut Vec<Vec<Polynomial>>,
    target: RingSignature,
) -> Result<Polynomial, PolyError> {
    if level == order.len() {
        let mut acc = FieldElement::zero();
        for (_, c) in terms {
            acc.add_assign_ref(c);
        }
        return Ok(Polynomial::constant(target, acc));
    }
    let var = order[level];
    let mut groups: BTreeMap<u32, Vec<(&Monomial, &FieldElement)>> = BTreeMap::new();
    for &(m, c) in terms {
        groups.entry(m.0[var]).or_default().push((m, c));
    }
    let mut out = Polynomial::zero(target);
    for (e, group) in groups {
        let inner = subst_rec(&group, order, level + 1, images, powers, target)?;
        if inner.is_zero() {
            continue;
        }
        while powers[var].len() <= e as usize {
            let next = powers[var]
                .last()
                .expect("nonempty")
                .try_mul(&images[var])?;
            powers[var].push(next);
        }
        let contrib = inner.try_mul(&powers[var][e as usize])?;
        for (m, c) in contrib.terms {
            out.add_term(m, &c);
        }
    }
    Ok(out)
}

macro_rules! poly_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&Polynomial> for &Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: &Polynomial) -> Polynomial {
                self.$checked(rhs).unwrap_or_else(|e| panic!("{}", e))
            }
        }
        impl $tr<Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: &Polynomial) -> Polynomial {
                (&self).$method(rhs)
            }
        }
        impl $tr<Polynomial> for &Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                self.$method(&rhs)
            }
        }
    };
}

poly_binop!(Add, add, try_add);
poly_binop!(Sub, sub, try_sub);
poly_binop!(Mul, mul, try_mul);

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.map_coefficients(|c| -c)
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        parse::write_polynomial(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(n: usize) -> RingSignature {
        RingSignature::new(n, false).unwrap()
    }

    fn p(s: &str, n: usize) -> Polynomial {
        Polynomial::parse(s, sig(n)).unwrap()
    }

    #[test]
    fn common_denominator_evaluation_matches_termwise() {
        let f = p("-3/7*x1^5*y*z^2 + 2/9*x2^3 - 11/2*z + 5/6*y^4*z", 2);
        let pt: Vec<FieldElement> = [(3, 4), (-5, 6), (7, 10), (0, 1)]
            .iter()
            .map(|&(a, b)| FieldElement::from_ratio(a, b))
            .collect();
        let mut expected = FieldElement::zero();
        for (m, c) in f.terms() {
            let mut t = c.clone();
            for (x, &e) in pt.iter().zip(m.exponents()) {
                t = &t * &x.pow(e as i64).unwrap();
            }
            expected = &expected + &t;
        }
        assert_eq!(f.evaluate(&pt).unwrap(), expected);
        assert_eq!(Polynomial::zero(sig(2)).evaluate(&pt).unwrap(), FieldElement::zero());
    }

    #[test]
    fn basic_products() {
        assert_eq!(p("z", 1) * p("z", 1), p("z^2", 1));
        assert_eq!(p("x1 + y", 1) + Polynomial::zero(sig(1)), p("x1 + y", 1));
        assert_eq!(p("x1 + y", 1).pow(2), p("x1^2 + 2*x1*y + y^2", 1));
    }

    #[test]
    fn x_bracket() {
        assert_eq!(Polynomial::x_power_bracket(sig(2), 2), p("x1^2*x2^2", 2));
        assert_eq!(Polynomial::x_power_bracket(sig(3), 0), Polynomial::one(sig(3)));
        assert_eq!(Polynomial::x_power_bracket(sig(1), 1), p("x1", 1));
    }

    #[test]
    fn derivatives() {
        assert_eq!(p("z^2", 1).partial_derivative(Var::Z).unwrap(), p("2*z", 1));
        assert_eq!(
            p("x1^2*x2^2*y", 2).partial_derivative(Var::Y).unwrap(),
            p("x1^2*x2^2", 2)
        );
        assert!(p("7", 1).partial_derivative(Var::Z).unwrap().is_zero());
        assert!(matches!(
            p("z", 1).partial_derivative(Var::W),
            Err(PolyError::UnknownVariable(_))
        ));
    }

    #[test]
    fn substitution_examples() {
        let z2 = p("z^2", 1);
        assert_eq!(
            z2.substitute_vars(&[(Var::Z, p("z + 1", 1))]).unwrap(),
            p("z^2 + 2*z + 1", 1)
        );
        let q = p("3*x1*y^2 - z + 1/2", 1);
        assert_eq!(q.substitute_vars(&[]).unwrap(), q);
        // x1 -> l x1, y -> l^-2 y fixes x1^2 y
        let lam = FieldElement::from_int(5);
        let inv2 = lam.pow(-2).unwrap();
        let img = p("x1^2*y", 1)
            .substitute_vars(&[
                (Var::X(1), p("x1", 1).scale(&lam)),
                (Var::Y, p("y", 1).scale(&inv2)),
            ])
            .unwrap();
        assert_eq!(img, p("x1^2*y", 1));
    }

    #[test]
    fn substitution_into_larger_ring() {
        let s1 = sig(1);
        let sw = s1.with_w();
        let images: Vec<Polynomial> = vec![
            Polynomial::gen(sw, Var::X(1)),
            Polynomial::gen(sw, Var::Y),
            Polynomial::parse("z + w", sw).unwrap(),
        ];
        let out = p("z^2", 1).substitute(&images).unwrap();
        assert_eq!(out, Polynomial::parse("z^2 + 2*z*w + w^2", sw).unwrap());
    }

    #[test]
    fn division_examples() {
        assert_eq!(
            p("x1^2*x2^2*y", 2).exact_divide(&p("x1^2*x2^2", 2)).unwrap(),
            p("y", 2)
        );
        assert_eq!(p("z^4 - 1", 1).exact_divide(&p("z^2 - 1", 1)).unwrap(), p("z^2 + 1", 1));
        assert_eq!(
            p("z^2 + 1", 1).exact_divide(&p("x1", 1)),
            Err(PolyError::NotDivisible)
        );
        assert_eq!(
            p("z", 1).exact_divide(&Polynomial::zero(sig(1))),
            Err(PolyError::DivisionByZeroPolynomial)
        );
    }

    #[test]
    fn evaluation() {
        let pt = vec![
            FieldElement::from_int(2),
            FieldElement::from_int(1),
            FieldElement::from_int(3),
        ];
        assert_eq!(p("z^2", 1).evaluate(&pt).unwrap(), FieldElement::from_int(9));
        assert!(Polynomial::zero(sig(1)).evaluate(&pt).unwrap().is_zero());
    }

    #[test]
    fn signature_mismatch() {
        assert!(matches!(
            p("x1", 1).try_add(&p("x1", 2)),
            Err(PolyError::SignatureMismatch(..))
        ));
    }

    #[test]
    fn resource_limit_trips() {
        let big = p("x1 + y + z + 1", 1).pow(6);
        let r = with_term_limit(10, || big.try_mul(&big));
        assert!(matches!(r, Err(PolyError::ResourceLimit { .. })));
    }

    #[test]
    fn embed_roundtrip() {
        let q = p("x1*y - z", 1);
        let sw = sig(1).with_w();
        let e = q.embed(sw).unwrap();
        assert_eq!(e.embed(sig(1)).unwrap(), q);
        let with_w = Polynomial::parse("w", sw).unwrap();
        assert!(with_w.embed(sig(1)).is_err());
    }
}
