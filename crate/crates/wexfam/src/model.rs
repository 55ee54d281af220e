//! The weighted exponential family: density, mixture decomposition,
//! power-transformed density, and the exact gamma-mixture sampler.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::Generator;
use crate::specialfn::{bernoulli_variate, gamma_variate, log_gamma, SeedStream};

/// Selects which member of the family the Kronecker delta picks: `Equal`
/// (a = b, two-component mixture) or `Distinct` (a != b, single component).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Equal,
    Distinct,
}

impl Variant {
    pub fn delta(self) -> f64 {
        match self {
            Variant::Equal => 1.0,
            Variant::Distinct => 0.0,
        }
    }

    /// The second-component weight `delta / (sigma + delta)`.
    pub fn mixture_weight(self, sigma: f64) -> f64 {
        let d = self.delta();
        d / (sigma + d)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Equal => "equal",
            Variant::Distinct => "distinct",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal" => Ok(Variant::Equal),
            "distinct" => Ok(Variant::Distinct),
            other => Err(Error::Config(format!("unknown variant `{other}` (expected equal or distinct)"))),
        }
    }
}

/// The `(mu, sigma)` parameter pair plus the variant flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    mu: f64,
    sigma: f64,
    variant: Variant,
}

impl ModelParams {
    pub fn new(mu: f64, sigma: f64, variant: Variant) -> Result<Self> {
        if !mu.is_finite() || mu <= 0.0 {
            return Err(Error::Domain(format!("mu must be positive and finite, got {mu}")));
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::Domain(format!("sigma must be positive and finite, got {sigma}")));
        }
        Ok(Self { mu, sigma, variant })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// The second-component weight `q = delta / (sigma + delta)`.
    pub fn mixture_weight(&self) -> f64 {
        self.variant.mixture_weight(self.sigma)
    }
}

/// Whether a builtin family uses the `(phi, lambda)` or the `(m, Omega)`
/// native parameterization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    Lindley,
    Nakagami,
}

pub(crate) fn family_kind(family: &str) -> Result<FamilyKind> {
    match family {
        "weighted_lindley" | "weighted_inverse_lindley" | "weighted_exp_lindley"
        | "weighted_log_lindley" => Ok(FamilyKind::Lindley),
        "weighted_nakagami" | "weighted_inverse_nakagami" | "weighted_exp_nakagami"
        | "weighted_log_nakagami" => Ok(FamilyKind::Nakagami),
        other => Err(Error::UnknownGenerator(other.to_string())),
    }
}

/// Native-scale parameters of a builtin family: `(phi, lambda)` for the
/// Lindley-type rows, `(m, Omega)` for the Nakagami-type rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NativeParams {
    pub family: String,
    pub first: f64,
    pub second: f64,
}

impl NativeParams {
    pub fn new(family: impl Into<String>, first: f64, second: f64) -> Result<Self> {
        let family = family.into();
        family_kind(&family)?;
        if !first.is_finite() || first <= 0.0 || !second.is_finite() || second <= 0.0 {
            return Err(Error::Domain(format!(
                "native parameters must be positive and finite, got ({first}, {second})"
            )));
        }
        Ok(Self { family, first, second })
    }

    pub fn kind(&self) -> FamilyKind {
        family_kind(&self.family).expect("validated at construction")
    }

    /// Names of the two native parameters.
    pub fn param_names(&self) -> (&'static str, &'static str) {
        match self.kind() {
            FamilyKind::Lindley => ("phi", "lambda"),
            FamilyKind::Nakagami => ("m", "omega"),
        }
    }

    /// Maps to the `(mu, sigma)` scale: `(phi, lambda) -> (phi, lambda/phi)`
    /// and `(m, Omega) -> (m, 1/Omega)`.
    pub fn to_model(&self, variant: Variant) -> Result<ModelParams> {
        let (mu, sigma) = match self.kind() {
            FamilyKind::Lindley => (self.first, self.second / self.first),
            FamilyKind::Nakagami => (self.first, 1.0 / self.second),
        };
        ModelParams::new(mu, sigma, variant)
    }

    /// Inverse of [`NativeParams::to_model`].
    pub fn from_model(family: &str, mu: f64, sigma: f64) -> Result<Self> {
        match family_kind(family)? {
            FamilyKind::Lindley => NativeParams::new(family, mu, sigma * mu),
            FamilyKind::Nakagami => NativeParams::new(family, mu, 1.0 / sigma),
        }
    }
}

/// The two mixture components of the density and their weight.
#[derive(Clone, Copy, Debug)]
pub struct MixtureComponents {
    pub f1: f64,
    pub f2: f64,
    /// Weight of `f2`: `delta / (sigma + delta)`.
    pub weight: f64,
}

fn check_eval_point(x: f64) -> Result<()> {
    if x.is_nan() || x.is_infinite() {
        return Err(Error::Domain(format!("evaluation point must be finite, got {x}")));
    }
    Ok(())
}

// log density evaluated in log space; -inf outside the support
fn log_pdf_inner(gen: &Generator, params: &ModelParams, x: f64) -> Result<f64> {
    if !gen.contains(x) {
        return Ok(f64::NEG_INFINITY);
    }
    let t = gen.t(x)?;
    let tp = gen.t_prime(x)?;
    let mu = params.mu();
    let sigma = params.sigma();
    let delta = params.variant().delta();
    let log_norm = (mu + 1.0) * (mu * sigma).ln() - (sigma + delta).ln() - log_gamma(mu + 1.0)?;
    Ok(log_norm + (delta * t).ln_1p() + tp.abs().ln() - t.ln() - mu * sigma * t + mu * t.ln())
}

/// Density `f(x; psi)`; zero outside the support.
pub fn pdf(gen: &Generator, params: &ModelParams, x: f64) -> Result<f64> {
    check_eval_point(x)?;
    let v = log_pdf_inner(gen, params, x)?.exp();
    if v.is_infinite() || v.is_nan() {
        return Err(Error::Range(format!("density at {x} is not representable")));
    }
    Ok(v)
}

/// Log density; `-inf` outside the support.
pub fn log_pdf(gen: &Generator, params: &ModelParams, x: f64) -> Result<f64> {
    check_eval_point(x)?;
    log_pdf_inner(gen, params, x)
}

/// The mixture decomposition `f = (1 - weight) f1 + weight f2`.
pub fn mixture_components(
    gen: &Generator,
    params: &ModelParams,
    x: f64,
) -> Result<MixtureComponents> {
    check_eval_point(x)?;
    let weight = params.mixture_weight();
    if !gen.contains(x) {
        return Ok(MixtureComponents { f1: 0.0, f2: 0.0, weight });
    }
    let t = gen.t(x)?;
    let tp = gen.t_prime(x)?;
    let mu = params.mu();
    let sigma = params.sigma();
    let shared = tp.abs().ln() - t.ln() - mu * sigma * t;
    let mut f = [0.0f64; 2];
    for (j, slot) in f.iter_mut().enumerate() {
        let shape = mu + j as f64; // mu + j - 1 for j = 1, 2
        let lg = shape * (mu * sigma).ln() - log_gamma(shape)? + shared + shape * t.ln();
        let v = lg.exp();
        if v.is_infinite() || v.is_nan() {
            return Err(Error::Range(format!("mixture component at {x} is not representable")));
        }
        *slot = v;
    }
    Ok(MixtureComponents { f1: f[0], f2: f[1], weight })
}

/// Density of the power transform `Y = X^{1/p}`; reduces to [`pdf`] at `p = 1`.
pub fn pdf_power(gen: &Generator, params: &ModelParams, p: f64, y: f64) -> Result<f64> {
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::Domain(format!("power must be positive and finite, got {p}")));
    }
    check_eval_point(y)?;
    let w = y.powf(p);
    if !gen.contains(w) {
        return Ok(0.0);
    }
    let t = gen.t(w)?;
    let tp = gen.t_prime(w)?;
    let mu = params.mu();
    let sigma = params.sigma();
    let delta = params.variant().delta();
    let log_norm = (mu + 1.0) * (mu * sigma).ln() - (sigma + delta).ln() - log_gamma(mu + 1.0)?;
    let lv = p.ln()
        + log_norm
        + (delta * t).ln_1p()
        + tp.abs().ln()
        + (p - 1.0) * y.ln()
        - t.ln()
        - mu * sigma * t
        + mu * t.ln();
    let v = lv.exp();
    if v.is_infinite() || v.is_nan() {
        return Err(Error::Range(format!("power density at {y} is not representable")));
    }
    Ok(v)
}

/// One draw via the stochastic representation: a Bernoulli pick between the
/// two transformed gamma components.
///
/// Exactly one Bernoulli and one gamma variate are consumed per draw (the
/// unused branch's variate is never drawn); this consumption pattern is part
/// of the reproducibility contract.
pub fn sample_one(gen: &Generator, params: &ModelParams, stream: &mut SeedStream) -> Result<f64> {
    let q = params.mixture_weight();
    let second = bernoulli_variate(q, stream)?;
    let shape = if second { params.mu() + 1.0 } else { params.mu() };
    let scale = 1.0 / (params.mu() * params.sigma());
    let z = gamma_variate(shape, scale, stream)?;
    gen.t_inverse(z)
}

/// `n` i.i.d. draws.
pub fn sample(
    gen: &Generator,
    params: &ModelParams,
    n: usize,
    stream: &mut SeedStream,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    (0..n).map(|_| sample_one(gen, params, stream)).collect()
}
