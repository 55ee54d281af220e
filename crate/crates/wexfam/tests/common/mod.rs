//! Shared test oracles: adaptive Gauss-Kronrod quadrature, the gamma-mixture
//! CDF, and Kolmogorov-Smirnov statistics. These stay independent of the
//! library code paths they are used to check.

// each test target compiles this module separately and uses a subset
#![allow(dead_code)]

use wexfam::generators::{Generator, Monotonicity};
use wexfam::model::ModelParams;
use wexfam::specialfn::{gamma_lower_regularized, gamma_upper_regularized};

const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * h, (kron - gauss).abs() * h)
}

/// Globally adaptive quadrature: repeatedly bisects the segment with the
/// largest error estimate until the total estimated error is below `tol`.
///
/// Intervals spanning many decades are seeded with log-spaced segments so
/// that no region of the domain is invisible to the first-level error
/// estimates (heavy-tailed members put non-negligible mass 40+ decades
/// above the mode).
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    assert!(b > a, "bad interval [{a}, {b}]");
    let mut segments: Vec<(f64, f64, f64, f64)> = Vec::new(); // (a, b, val, err)
    if a > 0.0 && b / a > 1e4 {
        let decades = (b / a).log10();
        let k = ((4.0 * decades).ceil() as usize).clamp(8, 400);
        let ratio = (b / a).powf(1.0 / k as f64);
        let mut lo = a;
        for i in 0..k {
            let hi = if i + 1 == k { b } else { lo * ratio };
            let (v, e) = gk15(f, lo, hi);
            segments.push((lo, hi, v, e));
            lo = hi;
        }
    } else {
        let (v, e) = gk15(f, a, b);
        segments.push((a, b, v, e));
    }
    for _ in 0..20_000 {
        let total_err: f64 = segments.iter().map(|s| s.3).sum();
        if total_err <= tol {
            break;
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (sa, sb, _, _) = segments.swap_remove(worst);
        let mid = 0.5 * (sa + sb);
        if mid <= sa || mid >= sb {
            // interval at floating-point resolution; keep its value
            let (v, _) = gk15(f, sa, sb);
            segments.push((sa, sb, v, 0.0));
            continue;
        }
        let (v1, e1) = gk15(f, sa, mid);
        let (v2, e2) = gk15(f, mid, sb);
        segments.push((sa, mid, v1, e1));
        segments.push((mid, sb, v2, e2));
    }
    segments.iter().map(|s| s.2).sum()
}

/// Support truncation `[x_lo, x_hi]` outside of which the density mass is
/// below ~1e-9, from the gamma tail bounds of `T(X)`.
pub fn support_bounds(gen: &Generator, params: &ModelParams) -> (f64, f64) {
    let mu = params.mu();
    let sigma = params.sigma();
    let q = params.mixture_weight();
    let rate = mu * sigma;
    let upper_tail = |t: f64| {
        (1.0 - q) * gamma_upper_regularized(mu, rate * t).unwrap()
            + q * gamma_upper_regularized(mu + 1.0, rate * t).unwrap()
    };
    let lower_tail = |t: f64| {
        (1.0 - q) * gamma_lower_regularized(mu, rate * t).unwrap()
            + q * gamma_lower_regularized(mu + 1.0, rate * t).unwrap()
    };
    let mut t_hi = (mu + 1.0) / rate;
    while upper_tail(t_hi) > 5e-10 {
        t_hi *= 2.0;
    }
    let mut t_lo = (mu + 1.0) / rate;
    while lower_tail(t_lo) > 5e-10 {
        t_lo *= 0.5;
        if t_lo < 1e-290 {
            break;
        }
    }
    let a = gen.t_inverse(t_lo).unwrap();
    let b = gen.t_inverse(t_hi).unwrap();
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// CDF of the model through the gamma-mixture representation of `T(X)`.
pub fn mixture_cdf(gen: &Generator, params: &ModelParams, x: f64) -> f64 {
    let d = gen.domain();
    if x <= d.lo {
        return 0.0;
    }
    if x >= d.hi {
        return 1.0;
    }
    let t = gen.t(x).unwrap();
    let mu = params.mu();
    let rate = mu * params.sigma();
    let q = params.mixture_weight();
    let below = (1.0 - q) * gamma_lower_regularized(mu, rate * t).unwrap()
        + q * gamma_lower_regularized(mu + 1.0, rate * t).unwrap();
    match gen.monotonicity() {
        Monotonicity::Increasing => below,
        Monotonicity::Decreasing => 1.0 - below,
    }
}

/// Kolmogorov-Smirnov statistic of a sample against a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// 1% critical value of the two-sided KS test for large n.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// Median of a list (consumes and sorts it).
pub fn median(mut xs: Vec<f64>) -> f64 {
    assert!(!xs.is_empty());
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
