//! Registry of generator transformations `T` that specialize the family.
//!
//! A generator is a strictly monotone, twice differentiable map from its
//! domain into `(0, inf)`. The eight builtin generators carry closed-form
//! derivatives and inverses; user-supplied generators fall back to a numeric
//! inverse.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Evaluations are capped at this magnitude; anything larger is reported as a
/// range error instead of saturating to infinity, because the estimators take
/// logs and ratios of T.
pub const VALUE_CAP: f64 = 1e300;

/// Stable identifiers of the builtin generators (these are the CLI names).
pub const BUILTIN_NAMES: [&str; 8] = [
    "weighted_lindley",
    "weighted_inverse_lindley",
    "weighted_exp_lindley",
    "weighted_log_lindley",
    "weighted_nakagami",
    "weighted_inverse_nakagami",
    "weighted_exp_nakagami",
    "weighted_log_nakagami",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
}

/// An open interval of the real line; endpoints may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub const POSITIVE: Domain = Domain { lo: 0.0, hi: f64::INFINITY };

    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && x > self.lo && x < self.hi
    }
}

type EvalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied generator; see [`Generator::custom`].
#[derive(Clone)]
pub struct CustomGenerator {
    name: String,
    domain: Domain,
    monotonicity: Monotonicity,
    t: EvalFn,
    t_prime: EvalFn,
    t_double_prime: EvalFn,
    t_inverse: Option<EvalFn>,
}

#[derive(Clone)]
enum Kind {
    Lindley,          // T(x) = x
    InverseLindley,   // T(x) = 1/x
    ExpLindley,       // T(x) = log(x + 1)
    LogLindley,       // T(x) = e^x - 1
    Nakagami,         // T(x) = x^2
    InverseNakagami,  // T(x) = 1/x^2
    ExpNakagami,      // T(x) = log(x^2 + 1)
    LogNakagami,      // T(x) = e^{x^2} - 1
    Power(f64),       // T(x) = x^{-s}
    Custom(Arc<CustomGenerator>),
}

/// A generator transformation `T` with derivatives, inverse, and domain.
#[derive(Clone)]
pub struct Generator {
    kind: Kind,
}

/// Looks up one of the eight builtin generators by its stable name.
pub fn builtin(name: &str) -> Result<Generator> {
    let kind = match name {
        "weighted_lindley" => Kind::Lindley,
        "weighted_inverse_lindley" => Kind::InverseLindley,
        "weighted_exp_lindley" => Kind::ExpLindley,
        "weighted_log_lindley" => Kind::LogLindley,
        "weighted_nakagami" => Kind::Nakagami,
        "weighted_inverse_nakagami" => Kind::InverseNakagami,
        "weighted_exp_nakagami" => Kind::ExpNakagami,
        "weighted_log_nakagami" => Kind::LogNakagami,
        _ => return Err(Error::UnknownGenerator(name.to_string())),
    };
    Ok(Generator { kind })
}

/// The power-law generator `T(x) = x^{-s}` on `(0, inf)`, `s != 0`.
pub fn power_generator(s: f64) -> Result<Generator> {
    if !s.is_finite() || s == 0.0 {
        return Err(Error::Domain(format!("power exponent must be finite and nonzero, got {s}")));
    }
    Ok(Generator { kind: Kind::Power(s) })
}

impl Generator {
    /// Wraps user-supplied closures as a generator. When `t_inverse` is absent
    /// the inverse is computed numerically (bracketing bisection plus a Newton
    /// polish).
    pub fn custom(
        name: impl Into<String>,
        domain: Domain,
        monotonicity: Monotonicity,
        t: impl Fn(f64) -> f64 + Send + Sync + 'static,
        t_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        t_double_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        t_inverse: Option<EvalFn>,
    ) -> Generator {
        Generator {
            kind: Kind::Custom(Arc::new(CustomGenerator {
                name: name.into(),
                domain,
                monotonicity,
                t: Arc::new(t),
                t_prime: Arc::new(t_prime),
                t_double_prime: Arc::new(t_double_prime),
                t_inverse,
            })),
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            Kind::Lindley => "weighted_lindley".into(),
            Kind::InverseLindley => "weighted_inverse_lindley".into(),
            Kind::ExpLindley => "weighted_exp_lindley".into(),
            Kind::LogLindley => "weighted_log_lindley".into(),
            Kind::Nakagami => "weighted_nakagami".into(),
            Kind::InverseNakagami => "weighted_inverse_nakagami".into(),
            Kind::ExpNakagami => "weighted_exp_nakagami".into(),
            Kind::LogNakagami => "weighted_log_nakagami".into(),
            Kind::Power(s) => format!("power(s={s})"),
            Kind::Custom(c) => c.name.clone(),
        }
    }

    /// The builtin family identifier, if this generator is one of the eight.
    pub fn family(&self) -> Option<&'static str> {
        match self.kind {
            Kind::Lindley => Some("weighted_lindley"),
            Kind::InverseLindley => Some("weighted_inverse_lindley"),
            Kind::ExpLindley => Some("weighted_exp_lindley"),
            Kind::LogLindley => Some("weighted_log_lindley"),
            Kind::Nakagami => Some("weighted_nakagami"),
            Kind::InverseNakagami => Some("weighted_inverse_nakagami"),
            Kind::ExpNakagami => Some("weighted_exp_nakagami"),
            Kind::LogNakagami => Some("weighted_log_nakagami"),
            _ => None,
        }
    }

    pub fn domain(&self) -> Domain {
        match &self.kind {
            Kind::Custom(c) => c.domain,
            _ => Domain::POSITIVE,
        }
    }

    pub fn monotonicity(&self) -> Monotonicity {
        match &self.kind {
            Kind::InverseLindley | Kind::InverseNakagami => Monotonicity::Decreasing,
            Kind::Power(s) if *s > 0.0 => Monotonicity::Decreasing,
            Kind::Custom(c) => c.monotonicity,
            _ => Monotonicity::Increasing,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.domain().contains(x)
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if !self.contains(x) {
            let d = self.domain();
            return Err(Error::Domain(format!(
                "argument {x} outside the domain ({}, {}) of {}",
                d.lo,
                d.hi,
                self.name()
            )));
        }
        Ok(())
    }

    fn cap(&self, what: &str, x: f64, v: f64) -> Result<f64> {
        if !v.is_finite() || v.abs() > VALUE_CAP {
            return Err(Error::Range(format!("{}: {what}({x}) exceeds 1e300", self.name())));
        }
        Ok(v)
    }

    /// `T(x)`; strictly positive on the domain.
    pub fn t(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        let v = match &self.kind {
            Kind::Lindley => x,
            Kind::InverseLindley => 1.0 / x,
            Kind::ExpLindley => x.ln_1p(),
            Kind::LogLindley => x.exp_m1(),
            Kind::Nakagami => x * x,
            Kind::InverseNakagami => 1.0 / (x * x),
            Kind::ExpNakagami => ln_1p_sq(x),
            Kind::LogNakagami => (x * x).exp_m1(),
            Kind::Power(s) => x.powf(-s),
            Kind::Custom(c) => (c.t)(x),
        };
        self.cap("T", x, v)
    }

    /// First derivative `T'(x)`.
    pub fn t_prime(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        let v = match &self.kind {
            Kind::Lindley => 1.0,
            Kind::InverseLindley => -1.0 / (x * x),
            Kind::ExpLindley => 1.0 / (x + 1.0),
            Kind::LogLindley => x.exp(),
            Kind::Nakagami => 2.0 * x,
            Kind::InverseNakagami => -2.0 / (x * x * x),
            // 2x/(x^2+1) written as 2/(x + 1/x) to survive x^2 overflow
            Kind::ExpNakagami => 2.0 / (x + 1.0 / x),
            Kind::LogNakagami => 2.0 * x * (x * x).exp(),
            Kind::Power(s) => -s * x.powf(-s - 1.0),
            Kind::Custom(c) => (c.t_prime)(x),
        };
        self.cap("T'", x, v)
    }

    /// Second derivative `T''(x)`.
    pub fn t_double_prime(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        let v = match &self.kind {
            Kind::Lindley => 0.0,
            Kind::InverseLindley => 2.0 / (x * x * x),
            Kind::ExpLindley => {
                let u = x + 1.0;
                -1.0 / (u * u)
            }
            Kind::LogLindley => x.exp(),
            Kind::Nakagami => 2.0,
            Kind::InverseNakagami => 6.0 / (x * x * x * x),
            Kind::ExpNakagami => {
                // -2 (x^2 - 1) / (x^2 + 1)^2
                let u = x + 1.0 / x;
                -2.0 * (x - 1.0 / x) / (x * u * u)
            }
            Kind::LogNakagami => 2.0 * (x * x).exp() * (1.0 + 2.0 * x * x),
            Kind::Power(s) => s * (s + 1.0) * x.powf(-s - 2.0),
            Kind::Custom(c) => (c.t_double_prime)(x),
        };
        self.cap("T''", x, v)
    }

    /// The inverse map: the `x` in the domain with `T(x) = z`, for `z > 0`.
    pub fn t_inverse(&self, z: f64) -> Result<f64> {
        if !z.is_finite() || z <= 0.0 {
            return Err(Error::Domain(format!(
                "inverse argument must be positive and finite, got {z}"
            )));
        }
        let v = match &self.kind {
            Kind::Lindley => z,
            Kind::InverseLindley => 1.0 / z,
            Kind::ExpLindley => z.exp_m1(),
            Kind::LogLindley => z.ln_1p(),
            Kind::Nakagami => z.sqrt(),
            Kind::InverseNakagami => 1.0 / z.sqrt(),
            Kind::ExpNakagami => z.exp_m1().sqrt(),
            Kind::LogNakagami => z.ln_1p().sqrt(),
            Kind::Power(s) => z.powf(-1.0 / s),
            Kind::Custom(c) => match &c.t_inverse {
                Some(inv) => (inv)(z),
                None => numeric_inverse(c, z)?,
            },
        };
        if !v.is_finite() {
            return Err(Error::Range(format!(
                "{}: inverse of {z} is not representable",
                self.name()
            )));
        }
        Ok(v)
    }
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Generator({})", self.name())
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

// log(x^2 + 1) without forming x^2 when it would overflow.
fn ln_1p_sq(x: f64) -> f64 {
    if x.abs() > 1e150 {
        2.0 * x.abs().ln() + (1.0 / (x * x)).ln_1p()
    } else {
        (x * x).ln_1p()
    }
}

// Bracketing bisection followed by a Newton polish, for custom generators
// without a closed-form inverse.
fn numeric_inverse(c: &CustomGenerator, z: f64) -> Result<f64> {
    let increasing = c.monotonicity == Monotonicity::Increasing;
    // signed residual that increases in x regardless of monotonicity
    let g = |x: f64| {
        let v = (c.t)(x);
        if increasing {
            v - z
        } else {
            z - v
        }
    };
    let lo_bound = c.domain.lo;
    let hi_bound = c.domain.hi;
    let seed = if lo_bound.is_finite() && hi_bound.is_finite() {
        0.5 * (lo_bound + hi_bound)
    } else if lo_bound.is_finite() {
        lo_bound + 1.0
    } else if hi_bound.is_finite() {
        hi_bound - 1.0
    } else {
        1.0
    };

    // expand a bracket [a, b] with g(a) <= 0 <= g(b)
    let mut a = seed;
    let mut b = seed;
    let mut steps = 0;
    while g(a) > 0.0 {
        a = if lo_bound.is_finite() {
            0.5 * (a + lo_bound)
        } else if a > 0.0 {
            a / 2.0 - 1.0
        } else {
            a * 2.0
        };
        steps += 1;
        if steps > 2000 || !g(a).is_finite() {
            return Err(Error::Domain(format!("{}: {z} is outside the range of T", c.name)));
        }
    }
    steps = 0;
    while g(b) < 0.0 {
        b = if hi_bound.is_finite() {
            0.5 * (b + hi_bound)
        } else if b < 0.0 {
            b / 2.0 + 1.0
        } else {
            b * 2.0
        };
        steps += 1;
        if steps > 2000 || !g(b).is_finite() {
            return Err(Error::Domain(format!("{}: {z} is outside the range of T", c.name)));
        }
    }

    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if g(mid) <= 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let mut x = 0.5 * (a + b);
    // Newton polish against the supplied derivative
    for _ in 0..4 {
        let fx = (c.t)(x) - z;
        let dfx = (c.t_prime)(x);
        if dfx == 0.0 || !fx.is_finite() || !dfx.is_finite() {
            break;
        }
        let next = x - fx / dfx;
        if c.domain.contains(next) {
            x = next;
        }
    }
    Ok(x)
}
