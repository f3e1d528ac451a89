//! Machine-checked verification reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{PolyError, Polynomial};

/// Residuals longer than this many terms are abbreviated in reports.
const RESIDUAL_TERMS_SHOWN: usize = 40;

/// How a check reached its verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// Exact symbolic computation.
    Exact,
    /// Evaluation at random points (Schwartz-Zippel).
    Randomized,
    /// A verdict whose converse direction rests on the classification
    /// theorems rather than on a computed witness.
    Cited,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<String>,
    pub anchor: String,
    pub basis: Basis,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("verification failed: {check}{}", residual.as_ref().map(|r| format!(" (residual {})", r)).unwrap_or_default())]
pub struct VerificationFailed {
    pub check: String,
    pub residual: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub claim: String,
    pub inputs: serde_json::Value,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub pass: bool,
}

/// Short text form of a residual polynomial.
pub fn summarize_residual(p: &Polynomial) -> String {
    let n = p.num_terms();
    if n <= RESIDUAL_TERMS_SHOWN {
        return p.to_string();
    }
    let shown = Polynomial::from_terms(
        p.signature(),
        p.terms()
            .rev()
            .take(RESIDUAL_TERMS_SHOWN)
            .map(|(m, c)| (m.clone(), c.clone())),
    );
    format!("{} + ... ({} terms)", shown, n)
}

impl Certificate {
    pub fn new(claim: impl Into<String>, inputs: serde_json::Value) -> Self {
        Certificate {
            claim: claim.into(),
            inputs,
            checks: Vec::new(),
            notes: Vec::new(),
            pass: true,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn check(&mut self, name: impl Into<String>, anchor: &str, basis: Basis, pass: bool, detail: Option<String>) {
        self.push(Check {
            name: name.into(),
            pass,
            residual: detail,
            anchor: anchor.to_string(),
            basis,
        });
    }

    /// Records an exact identity whose difference must be the zero polynomial.
    /// A computation error counts as a failure and is reported in place of the
    /// residual.
    pub fn check_zero(
        &mut self,
        name: impl Into<String>,
        anchor: &str,
        residual: Result<Polynomial, PolyError>,
    ) {
        let (pass, detail) = match residual {
            Ok(r) if r.is_zero() => (true, None),
            Ok(r) => (false, Some(summarize_residual(&r))),
            Err(e) => (false, Some(format!("error: {}", e))),
        };
        self.check(name, anchor, Basis::Exact, pass, detail);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Appends every check of `other`, prefixing names with `prefix`.
    pub fn absorb(&mut self, prefix: &str, other: Certificate) {
        for mut c in other.checks {
            c.name = format!("{}: {}", prefix, c.name);
            self.push(c);
        }
        for n in other.notes {
            self.notes.push(format!("{}: {}", prefix, n));
        }
    }

    pub fn passed(&self) -> bool {
        self.pass
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn into_result(self) -> Result<Certificate, VerificationFailed> {
        match self.first_failure() {
            None => Ok(self),
            Some(c) => Err(VerificationFailed {
                check: c.name.clone(),
                residual: c.residual.clone(),
            }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{} {}", verdict, self.claim);
        let _ = writeln!(out, "inputs: {}", self.inputs);
        for c in &self.checks {
            let mark = if c.pass { "ok  " } else { "FAIL" };
            let basis = match c.basis {
                Basis::Exact => "exact",
                Basis::Randomized => "randomized",
                Basis::Cited => "cited",
            };
            let _ = writeln!(out, "  [{}] {} ({}; {})", mark, c.name, c.anchor, basis);
            if let Some(r) = &c.residual {
                let _ = writeln!(out, "         {}", r);
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {}", n);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::RingSignature;

    #[test]
    fn pass_tracks_every_check() {
        let sig = RingSignature::new(1, false).unwrap();
        let mut c = Certificate::new("demo", serde_json::json!({"n": 1}));
        c.check_zero("zero", "demo anchor", Ok(Polynomial::zero(sig)));
        assert!(c.passed());
        c.check_zero("nonzero", "demo anchor", Ok(Polynomial::parse("z - 1", sig).unwrap()));
        assert!(!c.passed());
        let err = c.clone().into_result().unwrap_err();
        assert_eq!(err.check, "nonzero");
        assert_eq!(err.residual.as_deref(), Some("z - 1"));
        let back: Certificate = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert!(c.render_text().starts_with("FAIL demo"));
    }

    #[test]
    fn long_residuals_are_abbreviated() {
        let sig = RingSignature::new(1, false).unwrap();
        let p = Polynomial::parse("z + 1", sig).unwrap().pow(60);
        assert!(summarize_residual(&p).ends_with("(61 terms)"));
    }
}
