//! Ring endomorphisms and derivations of `Q[x1..xn, y, z(, w)]`, stored by
//! their values on generators.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::field::FieldElement;
use crate::hypersurface::PqSpec;
use crate::poly::{reduce_mod_relation, PolyError, Polynomial, RingSignature, Var};

pub const DEFAULT_NILPOTENCY_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MorphismError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("no vanishing iterate within {cap} applications")]
    ExceededCap { cap: usize },
    #[error("not a multiple of Delta: {reason}")]
    NotAMultiple { reason: String },
}

fn checked_images(sig: RingSignature, images: &[Polynomial]) -> Result<(), PolyError> {
    if images.len() != sig.nvars() {
        return Err(PolyError::SignatureMismatch(
            sig,
            images.first().map(Polynomial::signature).unwrap_or(sig),
        ));
    }
    for img in images {
        if img.signature() != sig {
            return Err(PolyError::SignatureMismatch(sig, img.signature()));
        }
    }
    Ok(())
}

fn serialize_images<S: Serializer>(
    sig: RingSignature,
    images: &[Polynomial],
    s: S,
) -> Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(images.len()))?;
    for (v, img) in sig.vars().zip(images) {
        map.serialize_entry(&v.to_string(), &img.to_string())?;
    }
    map.end()
}

/// Reads `{"x1": "...", ..., "y": "...", "z": "...", "w"?: "..."}`; the
/// signature is inferred from the keys.
fn deserialize_images<'de, D: Deserializer<'de>>(
    d: D,
) -> Result<(RingSignature, Vec<Polynomial>), D::Error> {
    let raw = BTreeMap::<String, String>::deserialize(d)?;
    let mut vars = Vec::with_capacity(raw.len());
    for k in raw.keys() {
        vars.push(k.parse::<Var>().map_err(D::Error::custom)?);
    }
    let n = vars.iter().filter(|v| matches!(v, Var::X(_))).count();
    let has_w = vars.contains(&Var::W);
    let sig = RingSignature::new(n, has_w).map_err(D::Error::custom)?;
    let mut images = Vec::with_capacity(sig.nvars());
    for v in sig.vars() {
        let text = raw
            .get(&v.to_string())
            .ok_or_else(|| D::Error::custom(format!("missing image of {}", v)))?;
        images.push(Polynomial::parse(text, sig).map_err(D::Error::custom)?);
    }
    Ok((sig, images))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingEndomorphism {
    sig: RingSignature,
    images: Vec<Polynomial>,
}

impl RingEndomorphism {
    pub fn new(sig: RingSignature, images: Vec<Polynomial>) -> Result<Self, PolyError> {
        checked_images(sig, &images)?;
        Ok(RingEndomorphism { sig, images })
    }

    pub fn identity(sig: RingSignature) -> Self {
        let images = sig.vars().map(|v| Polynomial::gen(sig, v)).collect();
        RingEndomorphism { sig, images }
    }

    /// Generators missing from `map` are fixed.
    pub fn from_images(sig: RingSignature, map: &[(Var, Polynomial)]) -> Result<Self, PolyError> {
        let mut out = RingEndomorphism::identity(sig);
        for (v, img) in map {
            out = out.with_image(*v, img.clone())?;
        }
        Ok(out)
    }

    pub fn with_image(mut self, v: Var, image: Polynomial) -> Result<Self, PolyError> {
        let idx = self
            .sig
            .index(v)
            .ok_or_else(|| PolyError::UnknownVariable(v.to_string()))?;
        if image.signature() != self.sig {
            return Err(PolyError::SignatureMismatch(self.sig, image.signature()));
        }
        self.images[idx] = image;
        Ok(self)
    }

    pub fn signature(&self) -> RingSignature {
        self.sig
    }

    pub fn image(&self, v: Var) -> Option<&Polynomial> {
        self.sig.index(v).map(|i| &self.images[i])
    }

    pub fn images(&self) -> &[Polynomial] {
        &self.images
    }

    pub fn apply(&self, p: &Polynomial) -> Result<Polynomial, PolyError> {
        if p.signature() != self.sig {
            return Err(PolyError::SignatureMismatch(self.sig, p.signature()));
        }
        p.substitute(&self.images)
    }

    /// `self` after `inner`: each generator `g` goes to `self(inner(g))`.
    pub fn compose(&self, inner: &RingEndomorphism) -> Result<RingEndomorphism, PolyError> {
        if inner.sig != self.sig {
            return Err(PolyError::SignatureMismatch(self.sig, inner.sig));
        }
        let images = inner
            .images
            .iter()
            .map(|g| self.apply(g))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RingEndomorphism {
            sig: self.sig,
            images,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.sig
            .vars()
            .zip(&self.images)
            .all(|(v, img)| *img == Polynomial::gen(self.sig, v))
    }

    /// `image(g) - g` for every generator, in signature order.
    pub fn generator_residuals(&self) -> Vec<(Var, Polynomial)> {
        self.sig
            .vars()
            .zip(&self.images)
            .map(|(v, img)| (v, img - &Polynomial::gen(self.sig, v)))
            .collect()
    }
}

impl fmt::Display for RingEndomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (v, img)) in self.sig.vars().zip(&self.images).enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{} -> {}", v, img)?;
        }
        Ok(())
    }
}

impl Serialize for RingEndomorphism {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_images(self.sig, &self.images, s)
    }
}

impl<'de> Deserialize<'de> for RingEndomorphism {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (sig, images) = deserialize_images(d)?;
        Ok(RingEndomorphism { sig, images })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    sig: RingSignature,
    images: Vec<Polynomial>,
}

impl Derivation {
    pub fn new(sig: RingSignature, images: Vec<Polynomial>) -> Result<Self, PolyError> {
        checked_images(sig, &images)?;
        Ok(Derivation { sig, images })
    }

    pub fn zero(sig: RingSignature) -> Self {
        Derivation {
            sig,
            images: vec![Polynomial::zero(sig); sig.nvars()],
        }
    }

    /// Generators missing from `map` are sent to zero.
    pub fn from_images(sig: RingSignature, map: &[(Var, Polynomial)]) -> Result<Self, PolyError> {
        let mut images = vec![Polynomial::zero(sig); sig.nvars()];
        for (v, img) in map {
            let idx = sig
                .index(*v)
                .ok_or_else(|| PolyError::UnknownVariable(v.to_string()))?;
            images[idx] = img.clone();
        }
        Derivation::new(sig, images)
    }

    pub fn signature(&self) -> RingSignature {
        self.sig
    }

    pub fn image(&self, v: Var) -> Option<&Polynomial> {
        self.sig.index(v).map(|i| &self.images[i])
    }

    pub fn images(&self) -> &[Polynomial] {
        &self.images
    }

    /// `sum_v dp/dv * delta(v)`.
    pub fn apply(&self, p: &Polynomial) -> Result<Polynomial, PolyError> {
        if p.signature() != self.sig {
            return Err(PolyError::SignatureMismatch(self.sig, p.signature()));
        }
        let mut out = Polynomial::zero(self.sig);
        for (v, img) in self.sig.vars().zip(&self.images) {
            if img.is_zero() || p.degree_in(v) == 0 {
                continue;
            }
            out = out.try_add(&p.partial_derivative(v)?.try_mul(img)?)?;
        }
        Ok(out)
    }

    /// The derivation `h * self`.
    pub fn scaled(&self, h: &Polynomial) -> Result<Derivation, PolyError> {
        let images = self
            .images
            .iter()
            .map(|img| h.try_mul(img))
            .collect::<Result<Vec<_>, _>>()?;
        Derivation::new(self.sig, images)
    }
}

impl Serialize for Derivation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_images(self.sig, &self.images, s)
    }
}

impl<'de> Deserialize<'de> for Derivation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (sig, images) = deserialize_images(d)?;
        Ok(Derivation { sig, images })
    }
}

/// The triangular derivation `Delta = x^[2] d/dz - 2z(1 + x^[1] q'(z^2)) d/dy`,
/// which kills `P_q - c`.
pub fn build_delta(spec: &PqSpec) -> Derivation {
    let sig = spec.signature();
    let u = Polynomial::x_power_bracket(sig, 1);
    let z = Polynomial::gen(sig, Var::Z);
    let dq = spec
        .q()
        .derivative()
        .eval_poly(&z.pow(2))
        .expect("small polynomial");
    let dy = (&z * &(Polynomial::one(sig) + &u * &dq)).scale(&FieldElement::from_int(-2));
    Derivation::from_images(
        sig,
        &[(Var::Z, Polynomial::x_power_bracket(sig, 2)), (Var::Y, dy)],
    )
    .expect("images in signature")
}

/// Smallest `m` with `delta^m(p) = 0`, in the ambient ring or, when `spec` is
/// given, in the quotient by `P_q - c` (each iterate is reduced before the
/// zero test). The zero polynomial has index 0.
pub fn nilpotency_index(
    delta: &Derivation,
    p: &Polynomial,
    spec: Option<&PqSpec>,
    cap: usize,
) -> Result<usize, MorphismError> {
    let reduce = |f: Polynomial| -> Result<Polynomial, PolyError> {
        match spec {
            Some(s) => reduce_mod_relation(&f, s),
            None => Ok(f),
        }
    };
    let mut current = reduce(p.clone())?;
    if current.is_zero() {
        return Ok(0);
    }
    for m in 1..=cap {
        current = reduce(delta.apply(&current)?)?;
        if current.is_zero() {
            return Ok(m);
        }
    }
    Err(MorphismError::ExceededCap { cap })
}

/// Writes `delta` as `h * Delta` on the coordinate ring of `V(P_q - c)`.
///
/// The conditions are tested in order: `delta(x_i) = 0`, `x^[2]` divides the
/// reduced `delta(z)` with a quotient in `Q[x]`, `delta(P_q - c) = 0`, and
/// `delta(y) = h * Delta(y)`, all modulo the relation.
pub fn decompose_as_delta_multiple(
    delta: &Derivation,
    spec: &PqSpec,
) -> Result<Polynomial, MorphismError> {
    let sig = spec.signature();
    if delta.signature() != sig {
        return Err(PolyError::SignatureMismatch(sig, delta.signature()).into());
    }
    let not_multiple = |reason: String| MorphismError::NotAMultiple { reason };
    for i in 1..=sig.n() {
        let dx = reduce_mod_relation(delta.image(Var::X(i)).expect("x in sig"), spec)?;
        if !dx.is_zero() {
            return Err(not_multiple(format!("delta(x{}) is not zero", i)));
        }
    }
    let dz = reduce_mod_relation(delta.image(Var::Z).expect("z in sig"), spec)?;
    let h = match dz.exact_divide(&Polynomial::x_power_bracket(sig, 2)) {
        Ok(h) => h,
        Err(PolyError::NotDivisible) => {
            return Err(not_multiple(format!("x^[2] does not divide delta(z) = {}", dz)))
        }
        Err(e) => return Err(e.into()),
    };
    if !h.is_in_x_subring() {
        return Err(not_multiple(format!("delta(z)/x^[2] = {} involves y or z", h)));
    }
    let killed = reduce_mod_relation(&delta.apply(&spec.relation())?, spec)?;
    if !killed.is_zero() {
        return Err(not_multiple("delta(P_q - c) is not zero".into()));
    }
    let big = build_delta(spec);
    let dy = delta.image(Var::Y).expect("y in sig");
    let diff = dy.try_sub(&h.try_mul(big.image(Var::Y).expect("y in sig"))?)?;
    if !reduce_mod_relation(&diff, spec)?.is_zero() {
        return Err(not_multiple("delta(y) differs from h*Delta(y)".into()));
    }
    Ok(h)
}
