//! Asymptotics of the closed-form estimators: the `g1`/`g2` functionals on
//! six-moment vectors, the closed-form expectations for power generators, and
//! the delta-method covariance with a finite-difference Jacobian.

use crate::error::{Error, Result};
use crate::estimation::{self, CompensatedSum, Coords};
use crate::generators::Generator;
use crate::model::{self, ModelParams};
use crate::specialfn::{digamma, SeedStream};

/// The six expectations (or sample means) `E(Y1*) .. E(Y6*)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentVector {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub e5: f64,
    pub e6: f64,
}

impl MomentVector {
    pub fn as_array(&self) -> [f64; 6] {
        [self.e1, self.e2, self.e3, self.e4, self.e5, self.e6]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self { e1: a[0], e2: a[1], e3: a[2], e4: a[3], e5: a[4], e6: a[5] }
    }

    fn coords(&self) -> Coords {
        // population Z at p = 1
        Coords {
            z: 1.0 + self.e1 + self.e2 + self.e3 - self.e4,
            y4: self.e4,
            y5: self.e5,
            y6: self.e6,
        }
    }
}

fn as_evaluation(err: Error) -> Error {
    match err {
        Error::Degenerate(msg) => Error::Evaluation(msg),
        other => other,
    }
}

/// The sigma functional: on sample moments it returns the closed-form sigma
/// estimate (same kernel as [`estimation::estimate_equal`]).
pub fn g1(m: &MomentVector) -> Result<f64> {
    let (sigma, _) = estimation::sigma_root(&m.coords(), 1e-12).map_err(as_evaluation)?;
    Ok(sigma)
}

/// The mu functional: `g2 = z / (g1 * e5 - e4)` on the same coordinates.
pub fn g2(m: &MomentVector) -> Result<f64> {
    let c = m.coords();
    let (sigma, _) = estimation::sigma_root(&c, 1e-12).map_err(as_evaluation)?;
    let (mu, _) = estimation::mu_ratio(&c, sigma, 1e-12).map_err(as_evaluation)?;
    Ok(mu)
}

/// Closed-form moment vector for the power generator `T(x) = x^{-s}` under
/// the equal (a = b) variant. `g1`/`g2` of this vector recover `sigma`/`mu`.
pub fn power_moments(mu: f64, sigma: f64, s: f64) -> Result<MomentVector> {
    if !mu.is_finite() || mu <= 0.0 || !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::Domain(format!(
            "parameters must be positive and finite, got mu={mu}, sigma={sigma}"
        )));
    }
    if !s.is_finite() || s == 0.0 {
        return Err(Error::Domain(format!("power exponent must be finite and nonzero, got {s}")));
    }
    let ell = digamma(mu)? - (mu * sigma).ln();
    let bracket = ell + 1.0 / (mu * (sigma + 1.0));
    let e6 = (1.0 + (mu + 1.0) / (mu * sigma)) / (sigma + 1.0);
    Ok(MomentVector {
        e1: -bracket / s,
        e2: (s + 1.0) / s * bracket,
        e3: (ell + 1.0 / mu) / (sigma + 1.0),
        e4: bracket,
        e5: e6 * (ell + 1.0 / mu) + 1.0 / (mu * sigma * (sigma + 1.0)),
        e6,
    })
}

/// Sample means of the six per-observation functionals over `n` fresh draws.
pub fn empirical_moments(
    gen: &Generator,
    params: &ModelParams,
    n: usize,
    stream: &mut SeedStream,
) -> Result<MomentVector> {
    if n == 0 {
        return Err(Error::Domain("need at least one draw".into()));
    }
    let mut acc = [CompensatedSum::default(); 6];
    for _ in 0..n {
        let y = model::sample_one(gen, params, stream)?;
        let terms = estimation::y_terms(gen, y, 1.0)?;
        for (slot, v) in acc.iter_mut().zip(terms) {
            slot.add(v);
        }
    }
    let mut a = [0.0; 6];
    for (slot, s) in a.iter_mut().zip(acc) {
        *slot = s.value() / n as f64;
    }
    Ok(MomentVector::from_array(a))
}

/// The delta-method covariance of `(mu_hat, sigma_hat)`:
/// `(1/n) A Sigma A^T` with `Sigma` the sample covariance of the six
/// per-observation functionals and `A` the 2x6 Jacobian of `(g2, g1)` at the
/// sample moment vector, by central finite differences.
pub fn delta_covariance(gen: &Generator, sample: &[f64]) -> Result<[[f64; 2]; 2]> {
    let n = sample.len();
    if n < 10 {
        return Err(Error::Domain(format!("need at least 10 observations, got {n}")));
    }
    let mut rows = Vec::with_capacity(n);
    for (i, &y) in sample.iter().enumerate() {
        let terms = estimation::y_terms(gen, y, 1.0)
            .map_err(|e| Error::Data { index: i, reason: e.to_string() })?;
        rows.push(terms);
    }
    let mut mean = [0.0f64; 6];
    for row in &rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }

    // unbiased sample covariance of the six functionals (upper triangle,
    // mirrored so the matrix is exactly symmetric)
    let mut sigma_hat = [[0.0f64; 6]; 6];
    for row in &rows {
        let d: Vec<f64> = row.iter().zip(mean).map(|(v, m)| v - m).collect();
        #[allow(clippy::needless_range_loop)]
        for j in 0..6 {
            for k in j..6 {
                sigma_hat[j][k] += d[j] * d[k];
            }
        }
    }
    #[allow(clippy::needless_range_loop)]
    for j in 0..6 {
        for k in j..6 {
            sigma_hat[j][k] /= (n - 1) as f64;
            sigma_hat[k][j] = sigma_hat[j][k];
        }
    }

    let jac = jacobian_at(&MomentVector::from_array(mean), None)?;

    // (1/n) A Sigma A^T, with the off-diagonal computed once
    let mut cov = [[0.0f64; 2]; 2];
    for r in 0..2 {
        for c in r..2 {
            let mut acc = 0.0;
            for j in 0..6 {
                for k in 0..6 {
                    acc += jac[r][j] * sigma_hat[j][k] * jac[c][k];
                }
            }
            cov[r][c] = acc / n as f64;
            cov[c][r] = cov[r][c];
        }
    }
    Ok(cov)
}

/// Central-difference Jacobian of `(g2, g1)` at `m`. The step is
/// `max(1e-5, 1e-5 |coordinate|)` per coordinate unless overridden.
pub fn jacobian_at(m: &MomentVector, step: Option<f64>) -> Result<[[f64; 6]; 2]> {
    let base = m.as_array();
    let mut jac = [[0.0f64; 6]; 2];
    for j in 0..6 {
        let h = match step {
            Some(h) => h * base[j].abs().max(1.0),
            None => 1e-5f64.max(1e-5 * base[j].abs()),
        };
        let mut up = base;
        up[j] += h;
        let mut dn = base;
        dn[j] -= h;
        let (mu_up, sg_up) = eval_pair(&MomentVector::from_array(up))?;
        let (mu_dn, sg_dn) = eval_pair(&MomentVector::from_array(dn))?;
        jac[0][j] = (mu_up - mu_dn) / (2.0 * h);
        jac[1][j] = (sg_up - sg_dn) / (2.0 * h);
    }
    if jac.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation("non-finite Jacobian entry".into()));
    }
    Ok(jac)
}

fn eval_pair(m: &MomentVector) -> Result<(f64, f64)> {
    let c = m.coords();
    let (sigma, _) = estimation::sigma_root(&c, 1e-12).map_err(as_evaluation)?;
    let (mu, _) = estimation::mu_ratio(&c, sigma, 1e-12).map_err(as_evaluation)?;
    Ok((mu, sigma))
}

#[cfg(test)]
// reference values are frozen with their full oracle precision
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::estimation::{estimate_equal, summary_stats};
    use crate::generators::{builtin, power_generator};
    use crate::model::Variant;

    const E: f64 = std::f64::consts::E;

    #[test]
    fn power_moments_reference() {
        // 50-digit evaluation of the closed forms at mu = sigma = s = 1
        let m = power_moments(1.0, 1.0, 1.0).unwrap();
        assert!((m.e1 - 0.077215664901532860607).abs() < 1e-14);
        assert!((m.e2 + 0.15443132980306572121).abs() < 1e-14);
        assert!((m.e3 - 0.2113921675492335697).abs() < 1e-14);
        assert!((m.e4 + 0.077215664901532860607).abs() < 1e-14);
        assert!((m.e5 - 1.1341765026477007091).abs() < 1e-14);
        assert_eq!(m.e6, 1.5);
        // linear relations of the power family
        assert!((m.e2 + 2.0 * m.e1).abs() < 1e-15);
        assert!((m.e4 + m.e1).abs() < 1e-15);

        assert!(power_moments(0.0, 1.0, 1.0).is_err());
        assert!(power_moments(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn moment_linear_relations_hold_generally() {
        for &(mu, sigma, s) in &[(0.5, 2.0, -2.0), (3.0, 0.5, 2.0), (5.0, 1.0, -1.0)] {
            let m = power_moments(mu, sigma, s).unwrap();
            assert!((m.e2 + (s + 1.0) * m.e1).abs() <= 1e-12 * m.e1.abs().max(1.0));
            assert!((m.e4 + s * m.e1).abs() <= 1e-12 * m.e1.abs().max(1.0));
            assert!(m.e6 > 0.0);
        }
    }

    #[test]
    fn g_functionals_recover_parameters() {
        let m = power_moments(1.0, 1.0, 1.0).unwrap();
        assert!((g1(&m).unwrap() - 1.0).abs() < 1e-12);
        assert!((g2(&m).unwrap() - 1.0).abs() < 1e-12);

        let m = power_moments(3.0, 0.5, 2.0).unwrap();
        assert!((g1(&m).unwrap() - 0.5).abs() < 1e-12);
        assert!((g2(&m).unwrap() - 3.0).abs() < 1e-12);

        let m = power_moments(5.0, 2.0, -1.0).unwrap();
        assert!((g1(&m).unwrap() - 2.0).abs() < 1e-11);
        assert!((g2(&m).unwrap() - 5.0).abs() < 1e-11);
    }

    #[test]
    fn fixed_point_grid() {
        for mu in [0.5, 1.0, 3.0, 5.0] {
            for sigma in [0.5, 1.0, 2.0] {
                for s in [-2.0, -1.0, 1.0, 2.0] {
                    let m = power_moments(mu, sigma, s).unwrap();
                    let r1 = (g1(&m).unwrap() - sigma).abs() / sigma;
                    let r2 = (g2(&m).unwrap() - mu).abs() / mu;
                    assert!(r1 <= 1e-9, "g1 at ({mu},{sigma},{s}): {r1}");
                    assert!(r2 <= 1e-9, "g2 at ({mu},{sigma},{s}): {r2}");
                }
            }
        }
    }

    #[test]
    fn g_on_sample_coordinates_equals_the_estimators() {
        let gen = builtin("weighted_lindley").unwrap();
        let s = summary_stats(&gen, &[1.0, E], 1.0).unwrap();
        let m = MomentVector {
            e1: s.y1,
            e2: s.y2,
            e3: s.y3,
            e4: s.y4,
            e5: s.y5,
            e6: s.y6,
        };
        let fit = estimate_equal(&gen, &[1.0, E]).unwrap();
        assert!((g1(&m).unwrap() - fit.sigma_hat).abs() < 1e-14);
        assert!((g2(&m).unwrap() - fit.mu_hat).abs() < 1e-14);
        assert!((g1(&m).unwrap() - 0.62166643888652395839).abs() < 1e-12);
        assert!((g2(&m).unwrap() - 3.9588328510069059569).abs() < 1e-12);
    }

    #[test]
    fn empirical_moments_deterministic_and_converging() {
        let gen = power_generator(2.0).unwrap();
        let params = ModelParams::new(2.0, 1.0, Variant::Equal).unwrap();
        let mut s1 = SeedStream::new(404, 0);
        let mut s2 = SeedStream::new(404, 0);
        let a = empirical_moments(&gen, &params, 2000, &mut s1).unwrap();
        let b = empirical_moments(&gen, &params, 2000, &mut s2).unwrap();
        assert_eq!(a, b);

        // big-sample agreement with the closed forms, within 3 standard errors
        // (checked more finely in the integration suite)
        let mut s3 = SeedStream::new(405, 0);
        let m = empirical_moments(&gen, &params, 200_000, &mut s3).unwrap();
        let want = power_moments(2.0, 1.0, 2.0).unwrap();
        for (got, want) in m.as_array().iter().zip(want.as_array()) {
            assert!((got - want).abs() < 0.02, "{got} vs {want}");
        }
    }

    #[test]
    fn jacobian_richardson_consistency() {
        // central differences are second order: halving the step should
        // shrink the distance to a tight-step Jacobian by ~4x; allow slack
        // for rounding on entries that are already converged.
        let m = power_moments(2.0, 1.0, 1.0).unwrap();
        let j_h = jacobian_at(&m, Some(1e-3)).unwrap();
        let j_h2 = jacobian_at(&m, Some(5e-4)).unwrap();
        let j_ref = jacobian_at(&m, Some(1e-6)).unwrap();
        for r in 0..2 {
            for c in 0..6 {
                let e_h = (j_h[r][c] - j_ref[r][c]).abs();
                let e_h2 = (j_h2[r][c] - j_ref[r][c]).abs();
                if e_h > 1e-8 {
                    let ratio = e_h / e_h2.max(1e-14);
                    assert!(ratio > 2.5, "entry ({r},{c}): ratio {ratio}");
                }
            }
        }
    }

    #[test]
    fn delta_covariance_is_symmetric_psd() {
        let gen = builtin("weighted_lindley").unwrap();
        let native = crate::model::NativeParams::new("weighted_lindley", 2.0, 1.0).unwrap();
        let params = native.to_model(Variant::Equal).unwrap();
        let mut stream = SeedStream::new(7171, 0);
        let sample = model::sample(&gen, &params, 4000, &mut stream).unwrap();
        let cov = delta_covariance(&gen, &sample).unwrap();
        assert!((cov[0][1] - cov[1][0]).abs() <= 1e-12);
        // 2x2 PSD: nonnegative diagonal and determinant
        assert!(cov[0][0] >= -1e-10);
        assert!(cov[1][1] >= -1e-10);
        let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
        assert!(det >= -1e-10, "determinant {det}");

        assert!(matches!(
            delta_covariance(&gen, &sample[..5]),
            Err(Error::Domain(_))
        ));
    }
}
