//! Quadrature-based density properties: normalization, the mixture component
//! densities, the power-transform density, and sampler/CDF agreement.

mod common;

use common::{integrate, ks_statistic, ks_critical_1pct, mixture_cdf, support_bounds};
use wexfam::generators::{builtin, BUILTIN_NAMES};
use wexfam::model::{self, ModelParams, Variant};
use wexfam::SeedStream;

#[test]
fn pdf_normalizes_on_a_parameter_slice() {
    // the full 8 x 2 x 9 grid runs in the acceptance suite; keep a smaller
    // slice here as a fast regression check
    for name in ["weighted_lindley", "weighted_inverse_nakagami", "weighted_log_lindley"] {
        let gen = builtin(name).unwrap();
        for variant in [Variant::Equal, Variant::Distinct] {
            for &(mu, sigma) in &[(0.5, 1.0), (3.0, 0.5)] {
                let params = ModelParams::new(mu, sigma, variant).unwrap();
                let (a, b) = support_bounds(&gen, &params);
                let mass = integrate(&|x| model::pdf(&gen, &params, x).unwrap(), a, b, 1e-9);
                assert!(
                    (mass - 1.0).abs() <= 1e-6,
                    "{name} {variant:?} mu={mu} sigma={sigma}: mass {mass}"
                );
            }
        }
    }
}

#[test]
fn mixture_component_densities_normalize() {
    let gen = builtin("weighted_lindley").unwrap();
    for &(mu, sigma) in &[(1.0, 1.0), (2.5, 0.7)] {
        let params = ModelParams::new(mu, sigma, Variant::Equal).unwrap();
        let (a, b) = support_bounds(&gen, &params);
        let m1 = integrate(&|x| model::mixture_components(&gen, &params, x).unwrap().f1, a, b, 1e-9);
        let m2 = integrate(&|x| model::mixture_components(&gen, &params, x).unwrap().f2, a, b, 1e-9);
        assert!((m1 - 1.0).abs() <= 1e-6, "f1 mass {m1}");
        assert!((m2 - 1.0).abs() <= 1e-6, "f2 mass {m2}");
    }
}

#[test]
fn pdf_power_normalizes() {
    let gen = builtin("weighted_lindley").unwrap();
    for &p in &[0.5f64, 2.0] {
        for &mu in &[1.0, 3.0] {
            for &sigma in &[0.5, 2.0] {
                let params = ModelParams::new(mu, sigma, Variant::Equal).unwrap();
                // Y = X^{1/p}: transform the X-support bounds
                let (xa, xb) = support_bounds(&gen, &params);
                let (a, b) = (xa.powf(1.0 / p), xb.powf(1.0 / p));
                let mass =
                    integrate(&|y| model::pdf_power(&gen, &params, p, y).unwrap(), a, b, 1e-9);
                assert!(
                    (mass - 1.0).abs() <= 1e-6,
                    "p={p} mu={mu} sigma={sigma}: mass {mass}"
                );
            }
        }
    }
}

#[test]
fn quadrature_cdf_agrees_with_gamma_mixture_cdf() {
    // two independent routes to the same CDF: integrating the density vs the
    // regularized incomplete gamma of the stochastic representation
    for name in ["weighted_lindley", "weighted_inverse_lindley", "weighted_nakagami"] {
        let gen = builtin(name).unwrap();
        let params = ModelParams::new(1.5, 0.8, Variant::Equal).unwrap();
        let (a, b) = support_bounds(&gen, &params);
        let mut cum = 0.0;
        let mut prev = a;
        for k in 1..=40 {
            let x = a + (b - a) * k as f64 / 41.0;
            cum += integrate(&|u| model::pdf(&gen, &params, u).unwrap(), prev, x, 1e-10);
            prev = x;
            let analytic = mixture_cdf(&gen, &params, x);
            assert!(
                (cum - analytic).abs() <= 1e-8,
                "{name} at {x}: quadrature {cum} vs mixture {analytic}"
            );
        }
    }
}

#[test]
fn sample_ks_against_cdf() {
    let gen = builtin("weighted_lindley").unwrap();
    let params = ModelParams::new(2.0, 0.5, Variant::Equal).unwrap();
    let mut stream = SeedStream::new(20_24, 3);
    let n = 100_000;
    let mut xs = model::sample(&gen, &params, n, &mut stream).unwrap();
    let d = ks_statistic(&mut xs, |x| mixture_cdf(&gen, &params, x));
    assert!(d < ks_critical_1pct(n), "KS {d} >= {}", ks_critical_1pct(n));
}

#[test]
fn sample_ks_all_generators_smoke() {
    // smaller n across every builtin and both variants
    for name in BUILTIN_NAMES {
        let gen = builtin(name).unwrap();
        for variant in [Variant::Equal, Variant::Distinct] {
            let params = ModelParams::new(1.2, 0.9, variant).unwrap();
            let mut stream = SeedStream::new(7_77, 1);
            let n = 20_000;
            let mut xs = model::sample(&gen, &params, n, &mut stream).unwrap();
            let d = ks_statistic(&mut xs, |x| mixture_cdf(&gen, &params, x));
            assert!(d < ks_critical_1pct(n), "{name} {variant:?}: KS {d}");
        }
    }
}
