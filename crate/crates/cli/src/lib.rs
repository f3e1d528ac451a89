//! Batch front end: each subcommand builds one certificate or verdict and
//! renders it as text or JSON.

use clap::{Parser, ValueEnum};
use serde_json::json;

use stably_distinct::certificate::Certificate;
use stably_distinct::equivalence::{
    build_hyper_equiv_automorphism, build_hyper_equiv_inverse, build_stable_equivalence,
    decide_hypersurface_equivalence, decide_poly_equivalence, default_c_samples,
    theorem_certificate, verify_stable_equivalence, EquivalenceError, HyperEquivVerdict,
    TheoremOptions,
};
use stably_distinct::field::{FieldContext, FieldElement};
use stably_distinct::hypersurface::{classify, verify_fiber_isomorphism, PqSpec};
use stably_distinct::poly::UnivariatePoly;
use stably_distinct::series::{verify_biholomorphism, DEFAULT_ORDER};
use stably_distinct::sz::sz_stable_pair;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    VerifyTheorem,
    Classify,
    Equiv,
    StableEquiv,
    FiberIso,
    SeriesCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "stably-distinct", version, about = "Verify stable-equivalence counterexamples exactly")]
pub struct CliConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Number of x-variables.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Coefficients of q, constant term first, e.g. `-1,1` for t - 1.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    /// Level c.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub q2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub c2: Option<String>,
    #[arg(long = "k-max", default_value_t = 3)]
    pub k_max: u32,
    /// Truncation order for `series-check`.
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: u32,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Seed for randomized evaluation checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random points per evaluation check; 0 disables them.
    #[arg(long, default_value_t = 0)]
    pub points: usize,
    /// Work over Q(sqrt(d)) instead of Q when deciding equivalence.
    #[arg(long = "adjoin-sqrt", allow_hyphen_values = true)]
    pub adjoin_sqrt: Option<String>,
    /// Comma-separated levels for the fiberwise isomorphism checks.
    #[arg(long = "c-samples", allow_hyphen_values = true)]
    pub c_samples: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub report: String,
}

fn usage(msg: impl Into<String>) -> Outcome {
    Outcome { code: EXIT_USAGE, report: format!("error: {}\n", msg.into()) }
}

fn required<'a>(v: &'a Option<String>, flag: &str) -> Result<&'a str, Outcome> {
    v.as_deref().ok_or_else(|| usage(format!("--{} is required for this command", flag)))
}

fn parse_q(text: &str, flag: &str) -> Result<UnivariatePoly, Outcome> {
    text.parse().map_err(|e| usage(format!("--{}: {}", flag, e)))
}

fn parse_c(text: &str, flag: &str) -> Result<FieldElement, Outcome> {
    text.trim().parse().map_err(|e| usage(format!("--{}: {}", flag, e)))
}

fn spec_from(cfg: &CliConfig) -> Result<PqSpec, Outcome> {
    let q = parse_q(required(&cfg.q, "q")?, "q")?;
    let c = parse_c(required(&cfg.c, "c")?, "c")?;
    PqSpec::new(cfg.n, q, c).map_err(|e| usage(e.to_string()))
}

fn render(cert: &Certificate, format: Format) -> Outcome {
    let report = match format {
        Format::Json => cert.to_json() + "\n",
        Format::Text => cert.render_text(),
    };
    Outcome { code: if cert.passed() { EXIT_PASS } else { EXIT_FAIL }, report }
}

fn run_inner(cfg: &CliConfig) -> Result<Outcome, Outcome> {
    if cfg.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    match cfg.command {
        Command::VerifyTheorem => {
            let c_samples = match &cfg.c_samples {
                Some(text) => text
                    .split(',')
                    .map(|s| parse_c(s, "c-samples"))
                    .collect::<Result<Vec<_>, _>>()?,
                None => default_c_samples(),
            };
            let opts = TheoremOptions { n: cfg.n, k_max: cfg.k_max, c_samples };
            let mut cert = match theorem_certificate(&opts) {
                Ok(c) => c,
                Err(EquivalenceError::Precondition { reason }) => return Err(usage(reason)),
                Err(e) => return Err(Outcome { code: EXIT_FAIL, report: format!("error: {}\n", e) }),
            };
            if cfg.points > 0 {
                for (label, q) in [
                    ("q = t - 1", UnivariatePoly::from_ints(&[-1, 1])),
                    ("q = t - 2", UnivariatePoly::from_ints(&[-2, 1])),
                ] {
                    let pair = build_stable_equivalence(&q, cfg.n).map_err(|e| usage(e.to_string()))?;
                    match sz_stable_pair(&pair.phi, &pair.psi, &q, cfg.seed, cfg.points) {
                        Ok(extra) => cert.absorb(label, extra),
                        Err(e) => return Err(Outcome { code: EXIT_FAIL, report: format!("error: {}\n", e) }),
                    }
                }
            }
            Ok(render(&cert, cfg.format))
        }
        Command::Classify => {
            let spec = spec_from(cfg)?;
            let class = classify(&spec);
            let report = match cfg.format {
                Format::Text => format!("{}\n", class),
                Format::Json => format!("{}\n", json!({ "spec": spec, "class": class })),
            };
            Ok(Outcome { code: EXIT_PASS, report })
        }
        Command::Equiv => equiv(cfg),
        Command::StableEquiv => {
            let q = parse_q(required(&cfg.q, "q")?, "q")?;
            let pair = build_stable_equivalence(&q, cfg.n).map_err(|e| usage(e.to_string()))?;
            let mut cert = verify_stable_equivalence(&pair, &q, cfg.n);
            if cfg.points > 0 {
                match sz_stable_pair(&pair.phi, &pair.psi, &q, cfg.seed, cfg.points) {
                    Ok(extra) => cert.absorb("random", extra),
                    Err(e) => return Err(Outcome { code: EXIT_FAIL, report: format!("error: {}\n", e) }),
                }
            }
            Ok(render(&cert, cfg.format))
        }
        Command::FiberIso => {
            let spec = spec_from(cfg)?;
            let mut cert = verify_fiber_isomorphism(&spec);
            if cfg.points > 0 {
                match stably_distinct::sz::sz_fiber_isomorphism(&spec, cfg.seed, cfg.points) {
                    Ok(extra) => cert.absorb("random", extra),
                    Err(e) => return Err(Outcome { code: EXIT_FAIL, report: format!("error: {}\n", e) }),
                }
            }
            Ok(render(&cert, cfg.format))
        }
        Command::SeriesCheck => {
            if cfg.order < 2 {
                return Err(usage("--order must be at least 2"));
            }
            let mut cert = verify_biholomorphism(cfg.n, cfg.order);
            if cfg.points > 0 {
                if let Ok(psi) = stably_distinct::series::biholomorphism(cfg.n, cfg.order) {
                    cert.absorb("random", stably_distinct::sz::sz_series(&psi, cfg.n, cfg.seed, cfg.points));
                }
            }
            Ok(render(&cert, cfg.format))
        }
    }
}

fn equiv(cfg: &CliConfig) -> Result<Outcome, Outcome> {
    let q1 = parse_q(required(&cfg.q, "q")?, "q")?;
    let c1 = parse_c(required(&cfg.c, "c")?, "c")?;
    let q2 = parse_q(required(&cfg.q2, "q2")?, "q2")?;
    let c2 = parse_c(required(&cfg.c2, "c2")?, "c2")?;
    let ctx = match &cfg.adjoin_sqrt {
        None => FieldContext::Rationals,
        Some(d) => {
            let d = parse_c(d, "adjoin-sqrt")?;
            let r = d
                .as_rational()
                .ok_or_else(|| usage("--adjoin-sqrt must be rational"))?;
            FieldContext::adjoin_sqrt(r)
        }
    };
    let hyper = decide_hypersurface_equivalence(&q1, &c1, &q2, &c2, &ctx);
    let poly = decide_poly_equivalence(&q1, &c1, &q2, &c2);
    let mut code = EXIT_PASS;
    let mut witness_check = None;
    if let HyperEquivVerdict::Equivalent(w) = &hyper {
        // re-check the witness map exactly before reporting it
        let ok = (|| -> Result<bool, EquivalenceError> {
            let r1 = PqSpec::new(cfg.n, q1.clone(), c1.clone())?.relation();
            let r2 = PqSpec::new(cfg.n, q2.clone(), c2.clone())?.relation();
            let theta = build_hyper_equiv_automorphism(w, cfg.n)?;
            let inv = build_hyper_equiv_inverse(w, cfg.n)?;
            let mu_inv = w.mu.checked_inv().map_err(|e| EquivalenceError::InvalidWitness {
                reason: e.to_string(),
            })?;
            Ok(theta.apply(&r2)? == r1.scale(&mu_inv) && inv.apply(&r1)? == r2.scale(&w.mu))
        })()
        .unwrap_or(false);
        if !ok {
            code = EXIT_FAIL;
        }
        witness_check = Some(ok);
    }
    let report = match cfg.format {
        Format::Text => {
            let mut s = format!("{}\npolynomials: {}\n", hyper, poly);
            if let Some(ok) = witness_check {
                s += &format!("witness map verified: {}\n", ok);
            }
            s
        }
        Format::Json => format!(
            "{}\n",
            json!({ "hypersurfaces": hyper, "polynomials": poly, "witness_verified": witness_check })
        ),
    };
    Ok(Outcome { code, report })
}

pub fn run(cfg: &CliConfig) -> Outcome {
    match run_inner(cfg) {
        Ok(o) | Err(o) => o,
    }
}

/// Parses `args` (including the program name) and runs the command. Usage
/// errors, `--help` and `--version` are reported through the outcome.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match CliConfig::try_parse_from(args) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            Outcome { code, report: e.to_string() }
        }
    }
}
