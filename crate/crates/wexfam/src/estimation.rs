//! Summary statistics and the closed-form estimators for both variants, with
//! native-parameter back-maps for all builtin families.
//!
//! The sigma estimator is the positive root of
//! `Z Y6 s^2 - [Z (1 - Y6) + Y5] s - (Z - Y4) = 0` and mu follows as
//! `Z / (s Y5 - Y4)`. Both are evaluated through a shared kernel on the six
//! sample coordinates; the asymptotic functionals in [`crate::asymptotics`]
//! reuse the same kernel, so the estimator/functional identity is structural
//! rather than tested-only.

use crate::error::{Error, Result};
use crate::generators::Generator;
use crate::model::{NativeParams, Variant};
use crate::specialfn::digamma;

/// Neumaier-compensated accumulator; makes sums insensitive to input order.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// The seven sample functionals evaluated at power `p`.
#[derive(Clone, Copy, Debug)]
pub struct SummaryStats {
    pub p: f64,
    pub n: usize,
    pub z_bar: f64,
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
    pub y4: f64,
    pub y5: f64,
    pub y6: f64,
}

/// Residual diagnostics attached to a fit.
#[derive(Clone, Copy, Debug)]
pub struct FitDiagnostics {
    /// Relative residual of sigma's defining equation (the quadratic for the
    /// equal variant, `sigma Y6 - 1` for the distinct variant).
    pub quadratic_residual: f64,
    /// The mu denominator (`sigma Y5 - Y4`, or `Y5 - Y6 Y4` for distinct).
    pub denominator: f64,
}

/// Point estimates on the `(mu, sigma)` scale plus the native back-map.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub native: Option<NativeParams>,
    pub covariance: Option<[[f64; 2]; 2]>,
    pub diagnostics: FitDiagnostics,
}

/// Tuning knobs for the degenerate-sample checks.
#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    /// Denominators are declared degenerate below
    /// `degeneracy_scale * (scale of the numerator terms)`.
    pub degeneracy_scale: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { degeneracy_scale: 1e-12 }
    }
}

/// The four coordinates the closed-form kernel consumes.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Coords {
    pub z: f64,
    pub y4: f64,
    pub y5: f64,
    pub y6: f64,
}

/// Positive root of `z y6 s^2 - [z(1-y6)+y5] s - (z-y4) = 0`, with its
/// relative residual.
pub(crate) fn sigma_root(c: &Coords, tol: f64) -> Result<(f64, f64)> {
    let a = c.z * c.y6;
    let b = c.z * (1.0 - c.y6) + c.y5;
    let c0 = c.z - c.y4;
    if !a.is_finite() || !b.is_finite() || !c0.is_finite() {
        return Err(Error::Degenerate("non-finite summary statistics".into()));
    }
    let scale = 1.0f64.max(b.abs()).max(c0.abs());
    if a.abs() <= tol * scale {
        return Err(Error::Degenerate(format!("quadratic coefficient Z*Y6 = {a} vanishes")));
    }
    let disc = b * b + 4.0 * a * c0;
    if disc < 0.0 {
        return Err(Error::Degenerate(format!("negative discriminant {disc}")));
    }
    let root = disc.sqrt();
    // the "+" branch, in the cancellation-free form
    let sigma = if b >= 0.0 { (b + root) / (2.0 * a) } else { 2.0 * c0 / (root - b) };
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::Degenerate(format!("non-positive sigma estimate {sigma}")));
    }
    let r = a * sigma * sigma - b * sigma - c0;
    let rel = r.abs()
        / (a * sigma * sigma)
            .abs()
            .max((b * sigma).abs())
            .max(c0.abs())
            .max(f64::MIN_POSITIVE);
    Ok((sigma, rel))
}

/// `mu = z / (sigma y5 - y4)`, with the denominator it divided by.
pub(crate) fn mu_ratio(c: &Coords, sigma: f64, tol: f64) -> Result<(f64, f64)> {
    let den = sigma * c.y5 - c.y4;
    if den.abs() <= tol * 1.0f64.max(c.z.abs()) {
        return Err(Error::Degenerate(format!("mu denominator sigma*Y5 - Y4 = {den} vanishes")));
    }
    let mu = c.z / den;
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::Degenerate(format!("non-positive mu estimate {mu}")));
    }
    Ok((mu, den))
}

/// Per-observation values of the six functionals at power `p`:
/// `[log y, (T''/T') w log y, (T'/(1+T)) w log y, (T'/T) w log y, T' w log y, T]`
/// where `w = y^p`.
pub(crate) fn y_terms(gen: &Generator, y: f64, p: f64) -> Result<[f64; 6]> {
    if !y.is_finite() || y <= 0.0 {
        return Err(Error::Domain(format!("observation must be a positive real, got {y}")));
    }
    if !gen.contains(y) {
        return Err(Error::Domain(format!("observation {y} outside the generator domain")));
    }
    let w = if p == 1.0 { y } else { y.powf(p) };
    if !gen.contains(w) {
        return Err(Error::Domain(format!("power-transformed observation {w} outside the generator domain")));
    }
    let t = gen.t(w)?;
    let tp = gen.t_prime(w)?;
    let tpp = gen.t_double_prime(w)?;
    let wl = w * y.ln();
    let terms = [
        y.ln(),
        tpp / tp * wl,
        tp / (1.0 + t) * wl,
        tp / t * wl,
        tp * wl,
        t,
    ];
    if terms.iter().any(|v| !v.is_finite()) {
        return Err(Error::Range(format!("non-finite statistic term at observation {y}")));
    }
    Ok(terms)
}

fn data_error(index: usize, err: Error) -> Error {
    Error::Data { index, reason: err.to_string() }
}

/// Evaluates the seven sample functionals `Z(p), Y1(p)..Y6(p)`.
pub fn summary_stats(gen: &Generator, sample: &[f64], p: f64) -> Result<SummaryStats> {
    if sample.is_empty() {
        return Err(Error::Domain("sample must contain at least one observation".into()));
    }
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::Domain(format!("power must be positive and finite, got {p}")));
    }
    let mut acc = [CompensatedSum::default(); 6];
    for (i, &y) in sample.iter().enumerate() {
        let terms = y_terms(gen, y, p).map_err(|e| data_error(i, e))?;
        for (slot, v) in acc.iter_mut().zip(terms) {
            slot.add(v);
        }
    }
    let n = sample.len() as f64;
    let m: Vec<f64> = acc.iter().map(|s| s.value() / n).collect();
    Ok(SummaryStats {
        p,
        n: sample.len(),
        z_bar: 1.0 / p + m[0] + m[1] + m[2] - m[3],
        y1: m[0],
        y2: m[1],
        y3: m[2],
        y4: m[3],
        y5: m[4],
        y6: m[5],
    })
}

impl SummaryStats {
    pub(crate) fn coords(&self) -> Coords {
        Coords { z: self.z_bar, y4: self.y4, y5: self.y5, y6: self.y6 }
    }
}

fn require_two(sample: &[f64]) -> Result<()> {
    if sample.len() < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 observations, got {}",
            sample.len()
        )));
    }
    Ok(())
}

fn native_of(gen: &Generator, mu: f64, sigma: f64) -> Result<Option<NativeParams>> {
    match gen.family() {
        Some(f) => Ok(Some(NativeParams::from_model(f, mu, sigma)?)),
        None => Ok(None),
    }
}

/// Closed-form fit for the equal (a = b) variant at `p = 1`.
pub fn estimate_equal(gen: &Generator, sample: &[f64]) -> Result<FitResult> {
    estimate_equal_with(gen, sample, &FitOptions::default())
}

pub fn estimate_equal_with(
    gen: &Generator,
    sample: &[f64],
    opts: &FitOptions,
) -> Result<FitResult> {
    require_two(sample)?;
    let stats = summary_stats(gen, sample, 1.0)?;
    let c = stats.coords();
    let (sigma, qres) = sigma_root(&c, opts.degeneracy_scale)?;
    let (mu, den) = mu_ratio(&c, sigma, opts.degeneracy_scale)?;
    Ok(FitResult {
        mu_hat: mu,
        sigma_hat: sigma,
        native: native_of(gen, mu, sigma)?,
        covariance: None,
        diagnostics: FitDiagnostics { quadratic_residual: qres, denominator: den },
    })
}

/// Closed-form fit for the distinct (a != b) variant: `sigma = 1/Y6` (the ML
/// estimator) and `mu = Y6 (1 + Y1 + Y2 - Y4) / (Y5 - Y6 Y4)`.
pub fn estimate_distinct(gen: &Generator, sample: &[f64]) -> Result<FitResult> {
    estimate_distinct_with(gen, sample, &FitOptions::default())
}

pub fn estimate_distinct_with(
    gen: &Generator,
    sample: &[f64],
    opts: &FitOptions,
) -> Result<FitResult> {
    require_two(sample)?;
    let stats = summary_stats(gen, sample, 1.0)?;
    if !stats.y6.is_finite() || stats.y6 <= 0.0 {
        return Err(Error::Degenerate(format!("Y6 = {} is not positive", stats.y6)));
    }
    let sigma = 1.0 / stats.y6;
    let num = stats.y6 * (1.0 + stats.y1 + stats.y2 - stats.y4);
    let den = stats.y5 - stats.y6 * stats.y4;
    if den.abs() <= opts.degeneracy_scale * 1.0f64.max(num.abs()) {
        return Err(Error::Degenerate(format!("mu denominator Y5 - Y6*Y4 = {den} vanishes")));
    }
    let mu = num / den;
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::Degenerate(format!("non-positive mu estimate {mu}")));
    }
    Ok(FitResult {
        mu_hat: mu,
        sigma_hat: sigma,
        native: native_of(gen, mu, sigma)?,
        covariance: None,
        diagnostics: FitDiagnostics { quadratic_residual: sigma * stats.y6 - 1.0, denominator: den },
    })
}

/// Dispatch on the variant flag.
pub fn estimate(gen: &Generator, variant: Variant, sample: &[f64]) -> Result<FitResult> {
    match variant {
        Variant::Equal => estimate_equal(gen, sample),
        Variant::Distinct => estimate_distinct(gen, sample),
    }
}

/// The `p`-profiled estimators `(sigma(p), mu(p))`; coincides with
/// [`estimate_equal`] at `p = 1`.
pub fn profile_estimators(gen: &Generator, sample: &[f64], p: f64) -> Result<(f64, f64)> {
    require_two(sample)?;
    let stats = summary_stats(gen, sample, p)?;
    let opts = FitOptions::default();
    let c = stats.coords();
    let (sigma, _) = sigma_root(&c, opts.degeneracy_scale)?;
    let (mu, _) = mu_ratio(&c, sigma, opts.degeneracy_scale)?;
    Ok((sigma, mu))
}

/// Left-minus-right of the profile equation in `p`.
///
/// The equation's bare `sigma` is evaluated at the profiled `sigma(p)`, i.e.
/// both estimators are substituted before taking the residual.
pub fn p_equation_residual(gen: &Generator, sample: &[f64], p: f64) -> Result<f64> {
    require_two(sample)?;
    let stats = summary_stats(gen, sample, p)?;
    let opts = FitOptions::default();
    let c = stats.coords();
    let (sigma, _) = sigma_root(&c, opts.degeneracy_scale)?;
    let (mu, _) = mu_ratio(&c, sigma, opts.degeneracy_scale)?;

    let mut log_t = CompensatedSum::default();
    for (i, &y) in sample.iter().enumerate() {
        let w = if p == 1.0 { y } else { y.powf(p) };
        let t = gen.t(w).map_err(|e| data_error(i, e))?;
        log_t.add(t.ln());
    }
    let mean_log_t = log_t.value() / sample.len() as f64;

    let lhs = mu.ln() - digamma(mu)?;
    let rhs = sigma * stats.y6 - 1.0 + (1.0 / sigma).ln() - mean_log_t;
    Ok(lhs - rhs)
}

/// Maps `(mu, sigma)` estimates to the native scale of a builtin family.
pub fn to_native(family: &str, mu_hat: f64, sigma_hat: f64) -> Result<NativeParams> {
    NativeParams::from_model(family, mu_hat, sigma_hat)
}

/// The per-family closed forms of `Z, Y4, Y5, Y6` (plus the remaining
/// coordinates), evaluated directly from their simplified displays at `p = 1`.
/// Agrees with [`summary_stats`] on the builtin generator of the same name.
pub fn specialized_stats(family: &str, sample: &[f64]) -> Result<SummaryStats> {
    if sample.is_empty() {
        return Err(Error::Domain("sample must contain at least one observation".into()));
    }
    let terms: fn(f64) -> [f64; 6] = match family {
        "weighted_lindley" => |y| {
            let l = y.ln();
            [l, 0.0, y * l / (1.0 + y), l, y * l, y]
        },
        "weighted_inverse_lindley" => |y| {
            let l = y.ln();
            let r = 1.0 / y;
            [l, -2.0 * l, -r * l / (1.0 + r), -l, -r * l, r]
        },
        "weighted_exp_lindley" => |y| {
            let l = y.ln();
            let u = y + 1.0;
            let lt = y.ln_1p();
            [l, -y * l / u, y * l / (u * (1.0 + lt)), y * l / (u * lt), y * l / u, lt]
        },
        "weighted_log_lindley" => |y| {
            let l = y.ln();
            let t = y.exp_m1();
            let ey = y.exp();
            [l, y * l, y * l, ey * y * l / t, ey * y * l, t]
        },
        "weighted_nakagami" => |y| {
            let l = y.ln();
            let sq = y * y;
            [l, l, 2.0 * sq * l / (1.0 + sq), 2.0 * l, 2.0 * sq * l, sq]
        },
        "weighted_inverse_nakagami" => |y| {
            let l = y.ln();
            let r = 1.0 / (y * y);
            [l, -3.0 * l, -2.0 * r * l / (1.0 + r), -2.0 * l, -2.0 * r * l, r]
        },
        "weighted_exp_nakagami" => |y| {
            let l = y.ln();
            let sq = y * y;
            let u = sq + 1.0;
            let lt = sq.ln_1p();
            [
                l,
                -(sq - 1.0) * l / u,
                2.0 * sq * l / (u * (1.0 + lt)),
                2.0 * sq * l / (u * lt),
                2.0 * sq * l / u,
                lt,
            ]
        },
        "weighted_log_nakagami" => |y| {
            let l = y.ln();
            let sq = y * y;
            let t = sq.exp_m1();
            let es = sq.exp();
            [l, (1.0 + 2.0 * sq) * l, 2.0 * sq * l, 2.0 * es * sq * l / t, 2.0 * es * sq * l, t]
        },
        other => return Err(Error::UnknownGenerator(other.to_string())),
    };

    let mut acc = [CompensatedSum::default(); 6];
    for (i, &y) in sample.iter().enumerate() {
        if !y.is_finite() || y <= 0.0 {
            return Err(Error::Data {
                index: i,
                reason: format!("observation must be a positive real, got {y}"),
            });
        }
        let vals = terms(y);
        if vals.iter().any(|v| !v.is_finite()) || vals[5] > crate::generators::VALUE_CAP {
            return Err(Error::Data {
                index: i,
                reason: format!("statistic term not representable at observation {y}"),
            });
        }
        for (slot, v) in acc.iter_mut().zip(vals) {
            slot.add(v);
        }
    }
    let n = sample.len() as f64;
    let m: Vec<f64> = acc.iter().map(|s| s.value() / n).collect();
    Ok(SummaryStats {
        p: 1.0,
        n: sample.len(),
        z_bar: 1.0 + m[0] + m[1] + m[2] - m[3],
        y1: m[0],
        y2: m[1],
        y3: m[2],
        y4: m[3],
        y5: m[4],
        y6: m[5],
    })
}
