//! Bootstrap bias reduction, RB/RMSE metrics, and the Monte Carlo study
//! harness.
//!
//! Replicate `i` of cell `(size index, point index)` draws from streams
//! addressed by a packed id of those indices, so a [`StudyReport`] is a pure
//! function of its [`StudyConfig`] no matter how replicates are scheduled.
//! With the `parallel` feature (on by default) replicates run on a rayon
//! pool sized by `parallelism`; `parallelism = 1` or builds without the
//! feature run the same loop sequentially.

use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{self, CompensatedSum, FitDiagnostics, FitResult};
use crate::generators::{self, Generator};
use crate::model::{self, NativeParams, Variant};
use crate::specialfn::{digamma, SeedStream};

/// Configuration of a Monte Carlo study.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub family: String,
    pub variant: Variant,
    /// True parameter points on the native scale; a single JSON object is
    /// accepted as well as an array.
    #[serde(deserialize_with = "one_or_many")]
    pub true_native: Vec<NativeParams>,
    pub sample_sizes: Vec<usize>,
    pub n_replications: usize,
    pub n_bootstrap: usize,
    pub master_seed: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn one_or_many<'de, D>(d: D) -> std::result::Result<Vec<NativeParams>, D::Error>
where
    D: Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(NativeParams),
        Many(Vec<NativeParams>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(p) => vec![p],
        OneOrMany::Many(v) => v,
    })
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        generators::builtin(&self.family)?;
        if self.true_native.is_empty() {
            return Err(Error::Config("true_native must contain at least one point".into()));
        }
        if self.true_native.len() > 256 {
            return Err(Error::Config("at most 256 parameter points per study".into()));
        }
        for p in &self.true_native {
            if p.family != self.family {
                return Err(Error::Config(format!(
                    "parameter point family `{}` does not match study family `{}`",
                    p.family, self.family
                )));
            }
            NativeParams::new(&p.family, p.first, p.second)?;
        }
        if self.sample_sizes.is_empty() {
            return Err(Error::Config("sample_sizes must be nonempty".into()));
        }
        if self.sample_sizes.len() > 65_535 {
            return Err(Error::Config("at most 65535 sample sizes per study".into()));
        }
        if self.sample_sizes.iter().any(|&n| n < 2) {
            return Err(Error::Config("every sample size must be at least 2".into()));
        }
        if self.n_replications == 0 || self.n_replications as u64 >= (1 << 39) {
            return Err(Error::Config("n_replications must be in 1..2^39".into()));
        }
        if self.n_bootstrap == 0 {
            return Err(Error::Config("n_bootstrap must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be at least 1".into()));
        }
        Ok(())
    }
}

/// RB/RMSE of the two native parameters, raw and bias-corrected.
#[derive(Clone, Copy, Debug)]
pub struct CellMetrics {
    pub raw_rb: [f64; 2],
    pub corrected_rb: [f64; 2],
    pub raw_rmse: [f64; 2],
    pub corrected_rmse: [f64; 2],
}

/// Results of one `(sample size, true point)` cell.
#[derive(Clone, Debug)]
pub struct CellReport {
    pub n: usize,
    pub true_native: NativeParams,
    /// Absent when every replicate was degenerate.
    pub metrics: Option<CellMetrics>,
    pub degenerate_count: usize,
    /// Set when more than 5% of the replicates were degenerate.
    pub flagged: bool,
    pub wall_clock_seconds: f64,
}

/// Study output: one cell per `(sample size, parameter point)`, ordered by
/// size-major index, plus per-size timing aggregated over the points.
#[derive(Clone, Debug)]
pub struct StudyReport {
    pub cells: Vec<CellReport>,
    pub size_seconds: Vec<(usize, f64)>,
}

/// Relative bias `|(mean(estimates) - theta) / theta|`.
pub fn rb(estimates: &[f64], theta: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::Domain("estimates must be nonempty".into()));
    }
    if theta == 0.0 || !theta.is_finite() {
        return Err(Error::Domain(format!("theta must be nonzero and finite, got {theta}")));
    }
    let mut sum = CompensatedSum::default();
    for &e in estimates {
        sum.add(e);
    }
    let mean = sum.value() / estimates.len() as f64;
    Ok(((mean - theta) / theta).abs())
}

/// Root mean squared error `sqrt(mean (estimate - theta)^2)`.
pub fn rmse(estimates: &[f64], theta: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::Domain("estimates must be nonempty".into()));
    }
    let mut sum = CompensatedSum::default();
    for &e in estimates {
        let d = e - theta;
        sum.add(d * d);
    }
    Ok((sum.value() / estimates.len() as f64).sqrt())
}

/// Bootstrap bias-reduced fit: `theta_star = 2 theta_hat - mean of B
/// nonparametric bootstrap fits`, applied coordinate-wise on the `(mu,
/// sigma)` scale and, when the generator is a builtin family, on the native
/// scale as well (the study reports correct on the native scale).
///
/// Degenerate resamples are redrawn so that exactly `b` fits are averaged; a
/// budget of `10 b` total draws bounds the redrawing. Corrected coordinates
/// are not clamped, so a heavily biased small-sample fit can produce a
/// nonpositive corrected value; the returned record reports it as-is.
pub fn bootstrap_bias_reduce(
    gen: &Generator,
    variant: Variant,
    sample: &[f64],
    b: usize,
    stream: &mut SeedStream,
) -> Result<(FitResult, FitResult)> {
    bootstrap_with_budget(gen, variant, sample, b, 10 * b, stream)
}

pub(crate) fn bootstrap_with_budget(
    gen: &Generator,
    variant: Variant,
    sample: &[f64],
    b: usize,
    budget: usize,
    stream: &mut SeedStream,
) -> Result<(FitResult, FitResult)> {
    if b == 0 {
        return Err(Error::Config("number of bootstrap replications must be at least 1".into()));
    }
    let hat = estimation::estimate(gen, variant, sample)?;
    let n = sample.len();

    let mut sum_mu = CompensatedSum::default();
    let mut sum_sigma = CompensatedSum::default();
    let mut sum_native = [CompensatedSum::default(); 2];
    let mut successes = 0usize;
    let mut attempts = 0usize;
    let mut degenerate = 0usize;
    let mut resample = vec![0.0f64; n];
    while successes < b {
        if attempts >= budget {
            return Err(Error::BootstrapFailed { degenerate, attempts, budget });
        }
        attempts += 1;
        for slot in resample.iter_mut() {
            *slot = sample[stream.uniform_index(n)];
        }
        match estimation::estimate(gen, variant, &resample) {
            Ok(fit) => {
                sum_mu.add(fit.mu_hat);
                sum_sigma.add(fit.sigma_hat);
                if let Some(nat) = &fit.native {
                    sum_native[0].add(nat.first);
                    sum_native[1].add(nat.second);
                }
                successes += 1;
            }
            Err(Error::Degenerate(_)) => degenerate += 1,
            Err(e) => return Err(e),
        }
    }

    let bf = b as f64;
    let star_mu = 2.0 * hat.mu_hat - sum_mu.value() / bf;
    let star_sigma = 2.0 * hat.sigma_hat - sum_sigma.value() / bf;
    let star_native = hat.native.as_ref().map(|nat| NativeParams {
        family: nat.family.clone(),
        first: 2.0 * nat.first - sum_native[0].value() / bf,
        second: 2.0 * nat.second - sum_native[1].value() / bf,
    });
    let star = FitResult {
        mu_hat: star_mu,
        sigma_hat: star_sigma,
        native: star_native,
        covariance: None,
        diagnostics: hat.diagnostics,
    };
    Ok((star, hat))
}

#[derive(Clone, Copy)]
enum Role {
    Data = 0,
    Bootstrap = 1,
}

// Packed stream address: collision-free as long as the config bounds hold
// (sizes < 2^16, points < 2^8, replicates < 2^39), which validate() enforces.
fn stream_id(size_idx: usize, point_idx: usize, replicate: usize, role: Role) -> u64 {
    ((size_idx as u64) << 48) | ((point_idx as u64) << 40) | ((replicate as u64) << 1) | role as u64
}

enum Executor {
    Sequential,
    #[cfg(feature = "parallel")]
    Pool(rayon::ThreadPool),
}

impl Executor {
    fn new(threads: usize) -> Result<Self> {
        #[cfg(feature = "parallel")]
        if threads > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
            return Ok(Executor::Pool(pool));
        }
        let _ = threads;
        Ok(Executor::Sequential)
    }

    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Send + Sync,
    {
        match self {
            Executor::Sequential => (0..count).map(f).collect(),
            #[cfg(feature = "parallel")]
            Executor::Pool(pool) => {
                use rayon::prelude::*;
                pool.install(|| (0..count).into_par_iter().map(f).collect())
            }
        }
    }
}

// (raw, corrected) native coordinates of one replicate, or None if degenerate
type ReplicateOutcome = Result<Option<([f64; 2], [f64; 2])>>;

// Deterministic reduction of a cell's replicate outcomes, in index order.
fn aggregate_cell(
    outcomes: Vec<ReplicateOutcome>,
    truth: [f64; 2],
) -> Result<(Option<CellMetrics>, usize)> {
    let n_rep = outcomes.len();
    let mut raw = [Vec::with_capacity(n_rep), Vec::with_capacity(n_rep)];
    let mut corrected = [Vec::with_capacity(n_rep), Vec::with_capacity(n_rep)];
    let mut degenerate_count = 0usize;
    for outcome in outcomes {
        match outcome? {
            Some((r, c)) => {
                for k in 0..2 {
                    raw[k].push(r[k]);
                    corrected[k].push(c[k]);
                }
            }
            None => degenerate_count += 1,
        }
    }
    let metrics = if raw[0].is_empty() {
        None
    } else {
        Some(CellMetrics {
            raw_rb: [rb(&raw[0], truth[0])?, rb(&raw[1], truth[1])?],
            corrected_rb: [rb(&corrected[0], truth[0])?, rb(&corrected[1], truth[1])?],
            raw_rmse: [rmse(&raw[0], truth[0])?, rmse(&raw[1], truth[1])?],
            corrected_rmse: [rmse(&corrected[0], truth[0])?, rmse(&corrected[1], truth[1])?],
        })
    };
    Ok((metrics, degenerate_count))
}

fn one_replicate(
    gen: &Generator,
    config: &StudyConfig,
    size_idx: usize,
    point_idx: usize,
    replicate: usize,
    n: usize,
    point: &NativeParams,
) -> ReplicateOutcome {
    let params = point.to_model(config.variant)?;
    let mut data_stream = SeedStream::new(
        config.master_seed,
        stream_id(size_idx, point_idx, replicate, Role::Data),
    );
    let sample = model::sample(gen, &params, n, &mut data_stream)?;
    let mut boot_stream = SeedStream::new(
        config.master_seed,
        stream_id(size_idx, point_idx, replicate, Role::Bootstrap),
    );
    match bootstrap_bias_reduce(gen, config.variant, &sample, config.n_bootstrap, &mut boot_stream)
    {
        Ok((star, hat)) => {
            let h = hat.native.as_ref().expect("builtin family has a native scale");
            let s = star.native.as_ref().expect("builtin family has a native scale");
            Ok(Some(([h.first, h.second], [s.first, s.second])))
        }
        Err(Error::Degenerate(_)) | Err(Error::BootstrapFailed { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Runs the full study grid. Cells are visited in `(size, point)` order and
/// aggregated by replicate index, never by completion order.
pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let gen = generators::builtin(&config.family)?;
    let exec = Executor::new(config.parallelism)?;
    let n_rep = config.n_replications;

    let mut cells = Vec::with_capacity(config.sample_sizes.len() * config.true_native.len());
    let mut size_seconds = Vec::with_capacity(config.sample_sizes.len());
    for (size_idx, &n) in config.sample_sizes.iter().enumerate() {
        let mut seconds_this_size = 0.0;
        for (point_idx, point) in config.true_native.iter().enumerate() {
            let started = Instant::now();
            let outcomes =
                exec.map(n_rep, |rep| one_replicate(&gen, config, size_idx, point_idx, rep, n, point));
            let (metrics, degenerate_count) = aggregate_cell(outcomes, [point.first, point.second])?;
            let wall_clock_seconds = started.elapsed().as_secs_f64();
            seconds_this_size += wall_clock_seconds;
            let flagged = degenerate_count as f64 > 0.05 * n_rep as f64;
            if flagged {
                log::warn!(
                    "cell n={n} point=({}, {}) has {degenerate_count}/{n_rep} degenerate replicates",
                    point.first,
                    point.second
                );
            }
            log::debug!(
                "cell n={n} point=({}, {}) finished in {wall_clock_seconds:.3}s",
                point.first,
                point.second
            );
            cells.push(CellReport {
                n,
                true_native: point.clone(),
                metrics,
                degenerate_count,
                flagged,
                wall_clock_seconds,
            });
        }
        size_seconds.push((n, seconds_this_size));
    }
    Ok(StudyReport { cells, size_seconds })
}

/// Newton refinement of the two score equations at `p = 1`, used as a test
/// oracle against the closed-form estimates. Starts at `init` (normally the
/// closed-form fit) and iterates in log-parameters with a finite-difference
/// Jacobian until the score max-norm is at most 1e-10.
///
/// The returned diagnostics carry the final score norm in
/// `quadratic_residual` and the last Jacobian determinant in `denominator`.
pub fn ml_oracle(
    gen: &Generator,
    variant: Variant,
    sample: &[f64],
    init: &FitResult,
) -> Result<FitResult> {
    if sample.len() < 2 {
        return Err(Error::Degenerate(format!("need at least 2 observations, got {}", sample.len())));
    }
    let mut t_sum = CompensatedSum::default();
    let mut log_t_sum = CompensatedSum::default();
    for (i, &y) in sample.iter().enumerate() {
        let t = gen.t(y).map_err(|e| Error::Data { index: i, reason: e.to_string() })?;
        t_sum.add(t);
        log_t_sum.add(t.ln());
    }
    let n = sample.len() as f64;
    let t_bar = t_sum.value() / n;
    let log_t_bar = log_t_sum.value() / n;
    let delta = variant.delta();

    let scores = |log_mu: f64, log_sigma: f64| -> Result<[f64; 2]> {
        let mu = log_mu.exp();
        let sigma = log_sigma.exp();
        let s1 = 1.0 + (mu * sigma).ln() - digamma(mu)? - sigma * t_bar + log_t_bar;
        let s2 = (mu + 1.0) / sigma - 1.0 / (sigma + delta) - mu * t_bar;
        Ok([s1, s2])
    };

    let mut x = [init.mu_hat.ln(), init.sigma_hat.ln()];
    let mut det = f64::NAN;
    const TOL: f64 = 1e-10;
    const FD_STEP: f64 = 1e-6;
    for _ in 0..200 {
        let s = scores(x[0], x[1])?;
        let norm = s[0].abs().max(s[1].abs());
        if norm <= TOL {
            let mu = x[0].exp();
            let sigma = x[1].exp();
            return Ok(FitResult {
                mu_hat: mu,
                sigma_hat: sigma,
                native: match gen.family() {
                    Some(f) => Some(NativeParams::from_model(f, mu, sigma)?),
                    None => None,
                },
                covariance: None,
                diagnostics: FitDiagnostics { quadratic_residual: norm, denominator: det },
            });
        }

        let mut jac = [[0.0f64; 2]; 2];
        for j in 0..2 {
            let mut up = x;
            up[j] += FD_STEP;
            let mut dn = x;
            dn[j] -= FD_STEP;
            let su = scores(up[0], up[1])?;
            let sd = scores(dn[0], dn[1])?;
            jac[0][j] = (su[0] - sd[0]) / (2.0 * FD_STEP);
            jac[1][j] = (su[1] - sd[1]) / (2.0 * FD_STEP);
        }
        det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-14 || !det.is_finite() {
            return Err(Error::OracleFailure(format!("singular score Jacobian (det {det})")));
        }
        let dx = [
            -(jac[1][1] * s[0] - jac[0][1] * s[1]) / det,
            -(jac[0][0] * s[1] - jac[1][0] * s[0]) / det,
        ];

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = [x[0] + step * dx[0], x[1] + step * dx[1]];
            if let Ok(sc) = scores(cand[0], cand[1]) {
                if sc[0].abs().max(sc[1].abs()) < norm {
                    x = cand;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::OracleFailure("line search stalled".into()));
        }
    }
    Err(Error::OracleFailure("no convergence in 200 iterations".into()))
}
