//! `wexfam`: fit data files, draw samples, run Monte Carlo studies, and
//! verify the asymptotic fixed-point identities.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error,
//! 3 degenerate sample.

mod chart;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use report::{fmt_f64, Csv};
use wexfam::asymptotics::{delta_covariance, g1, g2, power_moments};
use wexfam::estimation::{estimate, FitResult};
use wexfam::generators::{builtin, BUILTIN_NAMES};
use wexfam::mcstudy::{run_study, StudyConfig, StudyReport};
use wexfam::model::{self, NativeParams, Variant};
use wexfam::{Error, SeedStream};

#[derive(Parser)]
#[command(
    name = "wexfam",
    version,
    about = "Weighted exponential family: closed-form fitting, sampling, and Monte Carlo studies",
    after_help = "Generator families:\n  weighted_lindley, weighted_inverse_lindley, weighted_exp_lindley,\n  weighted_log_lindley, weighted_nakagami, weighted_inverse_nakagami,\n  weighted_exp_nakagami, weighted_log_nakagami\n\nSet WEXFAM_LOG=debug for verbose logging."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a newline-delimited data file with the closed-form estimators
    Fit(FitArgs),
    /// Draw samples from a family member and write them to sample.txt
    Sample(SampleArgs),
    /// Run a Monte Carlo study from a JSON configuration
    Simulate(SimulateArgs),
    /// Check the fixed-point identities of the asymptotic functionals
    Verify(VerifyArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Generator family name
    #[arg(long)]
    family: String,
    /// Family variant: equal (a = b) or distinct (a != b)
    #[arg(long, default_value = "equal")]
    variant: String,
    /// Data file: one decimal observation per line, `#` comments allowed
    #[arg(long)]
    data: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    family: String,
    #[arg(long, default_value = "equal")]
    variant: String,
    /// Native parameters as `first,second` (phi,lambda or m,omega)
    #[arg(long)]
    params: String,
    /// Number of observations to draw
    #[arg(long)]
    n: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Master seed of the variate stream
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Study configuration (JSON with the StudyConfig fields)
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the configured master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured parallelism (defaults to available cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Self-test hook: perturb the computed moments to exercise the failure path
    #[arg(long, hide = true, default_value_t = 0.0)]
    self_test_perturb: f64,
}

enum CliError {
    /// exit 2: unusable input (file, flags, config, parameters)
    Input(String),
    /// exit 3: the sample makes the estimators undefined
    Degenerate(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Degenerate(msg) => CliError::Degenerate(format!("degenerate sample: {msg}")),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("i/o error: {e}"))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("WEXFAM_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Degenerate(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn parse_variant(s: &str) -> Result<Variant, CliError> {
    s.parse::<Variant>().map_err(|e| CliError::Input(e.to_string()))
}

fn check_family(name: &str) -> Result<(), CliError> {
    if !BUILTIN_NAMES.contains(&name) {
        return Err(CliError::Input(format!(
            "unknown family `{name}`; expected one of: {}",
            BUILTIN_NAMES.join(", ")
        )));
    }
    Ok(())
}

/// Parses a data file into values and their 1-based line numbers.
fn read_data(path: &Path) -> Result<Vec<(usize, f64)>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let value: f64 = trimmed
            .parse()
            .map_err(|_| CliError::Input(format!("line {line_no}: cannot parse `{trimmed}` as a number")))?;
        out.push((line_no, value));
    }
    if out.is_empty() {
        return Err(CliError::Input(format!("{}: no observations found", path.display())));
    }
    Ok(out)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    log::info!("wrote {}", dir.join(name).display());
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<ExitCode, CliError> {
    check_family(&args.family)?;
    let variant = parse_variant(&args.variant)?;
    let gen = builtin(&args.family).map_err(CliError::from)?;
    let data = read_data(&args.data)?;
    let values: Vec<f64> = data.iter().map(|&(_, v)| v).collect();

    let mut fit: FitResult = estimate(&gen, variant, &values).map_err(|e| match e {
        // name the file line, not the vector index
        Error::Data { index, reason } => {
            CliError::Input(format!("line {}: {reason}", data[index].0))
        }
        other => CliError::from(other),
    })?;

    if variant == Variant::Equal && values.len() >= 10 {
        match delta_covariance(&gen, &values) {
            Ok(cov) => fit.covariance = Some(cov),
            Err(e) => log::warn!("delta-method covariance unavailable: {e}"),
        }
    }
    let (se_mu, se_sigma) = match fit.covariance {
        Some(cov) => (cov[0][0].max(0.0).sqrt(), cov[1][1].max(0.0).sqrt()),
        None => (f64::NAN, f64::NAN),
    };

    let native = fit.native.as_ref().expect("builtin families have a native scale");
    let mut csv = Csv::new(&[
        "family",
        "variant",
        "n",
        "mu_hat",
        "sigma_hat",
        "native_first",
        "native_second",
        "se_mu",
        "se_sigma",
        "quadratic_residual",
    ]);
    csv.push_row(vec![
        args.family.clone(),
        variant.to_string(),
        values.len().to_string(),
        fmt_f64(fit.mu_hat),
        fmt_f64(fit.sigma_hat),
        fmt_f64(native.first),
        fmt_f64(native.second),
        fmt_f64(se_mu),
        fmt_f64(se_sigma),
        fmt_f64(fit.diagnostics.quadratic_residual),
    ]);
    write_file(&args.out, "fit.csv", &csv.to_string())?;
    println!(
        "{}: n={} mu_hat={} sigma_hat={}",
        args.family,
        values.len(),
        fmt_f64(fit.mu_hat),
        fmt_f64(fit.sigma_hat)
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_sample(args: SampleArgs) -> Result<ExitCode, CliError> {
    check_family(&args.family)?;
    let variant = parse_variant(&args.variant)?;
    if args.n == 0 {
        return Err(CliError::Input("sample count must be at least 1".into()));
    }
    let (first, second) = args
        .params
        .split_once(',')
        .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)))
        .ok_or_else(|| {
            CliError::Input(format!("cannot parse `--params {}`; expected `first,second`", args.params))
        })?;
    let native = NativeParams::new(&args.family, first, second).map_err(CliError::from)?;
    let params = native.to_model(variant).map_err(CliError::from)?;
    let gen = builtin(&args.family).map_err(CliError::from)?;

    let mut stream = SeedStream::new(args.seed, 0);
    let sample = model::sample(&gen, &params, args.n as usize, &mut stream).map_err(CliError::from)?;
    let mut text = String::with_capacity(sample.len() * 20);
    for x in &sample {
        text.push_str(&fmt_f64(*x));
        text.push('\n');
    }
    write_file(&args.out, "sample.txt", &text)?;
    Ok(ExitCode::SUCCESS)
}

fn study_csv(config: &StudyConfig, report: &StudyReport) -> Csv {
    let mut csv = Csv::new(&[
        "family",
        "variant",
        "n",
        "parameter",
        "true_value",
        "raw_rb",
        "corrected_rb",
        "raw_rmse",
        "corrected_rmse",
        "degenerate_count",
        "flagged",
        "seconds",
    ]);
    for cell in &report.cells {
        let names = cell.true_native.param_names();
        for (k, name) in [names.0, names.1].into_iter().enumerate() {
            let truth = if k == 0 { cell.true_native.first } else { cell.true_native.second };
            let metric = |f: fn(&wexfam::mcstudy::CellMetrics) -> f64| match &cell.metrics {
                Some(m) => fmt_f64(f(m)),
                None => fmt_f64(f64::NAN),
            };
            csv.push_row(vec![
                config.family.clone(),
                config.variant.to_string(),
                cell.n.to_string(),
                name.to_string(),
                fmt_f64(truth),
                if k == 0 { metric(|m| m.raw_rb[0]) } else { metric(|m| m.raw_rb[1]) },
                if k == 0 { metric(|m| m.corrected_rb[0]) } else { metric(|m| m.corrected_rb[1]) },
                if k == 0 { metric(|m| m.raw_rmse[0]) } else { metric(|m| m.raw_rmse[1]) },
                if k == 0 { metric(|m| m.corrected_rmse[0]) } else { metric(|m| m.corrected_rmse[1]) },
                cell.degenerate_count.to_string(),
                cell.flagged.to_string(),
                fmt_f64(cell.wall_clock_seconds),
            ]);
        }
    }
    csv
}

// one panel per native parameter; per true point: corrected solid, raw dashed
fn metric_panels(
    report: &StudyReport,
    title: &str,
    pick: fn(&wexfam::mcstudy::CellMetrics, usize) -> (f64, f64),
) -> Vec<chart::Panel> {
    let mut points: Vec<NativeParams> = Vec::new();
    for cell in &report.cells {
        if !points.contains(&cell.true_native) {
            points.push(cell.true_native.clone());
        }
    }
    let names = points[0].param_names();
    let mut panels = Vec::new();
    for k in 0..2 {
        let param = if k == 0 { names.0 } else { names.1 };
        let mut series = Vec::new();
        for (pi, point) in points.iter().enumerate() {
            let color = chart::PALETTE[pi % chart::PALETTE.len()];
            let label = format!("{}={}", names.0, fmt_f64(point.first));
            let mut raw = Vec::new();
            let mut corrected = Vec::new();
            for cell in report.cells.iter().filter(|c| &c.true_native == point) {
                if let Some(m) = &cell.metrics {
                    let (r, c) = pick(m, k);
                    raw.push((cell.n as f64, r));
                    corrected.push((cell.n as f64, c));
                }
            }
            series.push(chart::Series {
                label: format!("{label} corrected"),
                color,
                dashed: false,
                points: corrected,
            });
            series.push(chart::Series { label: format!("{label} raw"), color, dashed: true, points: raw });
        }
        panels.push(chart::Panel {
            title: format!("{title} of {param}"),
            x_label: "n (log scale)".into(),
            y_label: title.into(),
            log_x: true,
            series,
        });
    }
    panels
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.config.display())))?;
    let mut config: StudyConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(threads) = args.threads {
        config.parallelism = threads;
    }
    config.validate().map_err(CliError::from)?;

    let report = run_study(&config).map_err(CliError::from)?;

    write_file(&args.out, "study.csv", &study_csv(&config, &report).to_string())?;

    let rb_panels = metric_panels(&report, "relative bias", |m, k| (m.raw_rb[k], m.corrected_rb[k]));
    write_file(&args.out, "rb.svg", &chart::render(&rb_panels))?;
    let rmse_panels = metric_panels(&report, "RMSE", |m, k| (m.raw_rmse[k], m.corrected_rmse[k]));
    write_file(&args.out, "rmse.svg", &chart::render(&rmse_panels))?;

    let time_panel = chart::Panel {
        title: "study wall-clock time".into(),
        x_label: "n (log scale)".into(),
        y_label: "seconds".into(),
        log_x: true,
        series: vec![chart::Series {
            label: "all parameter points".into(),
            color: chart::PALETTE[0],
            dashed: false,
            points: report.size_seconds.iter().map(|&(n, s)| (n as f64, s)).collect(),
        }],
    };
    write_file(&args.out, "time.svg", &chart::render(&[time_panel]))?;

    for (n, s) in &report.size_seconds {
        println!("n={n}: {s:.2}s");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, CliError> {
    let mut csv = Csv::new(&["mu", "sigma", "s", "g1_abs_error", "g2_abs_error"]);
    let mut all_ok = true;
    for mu in [0.5, 1.0, 3.0, 5.0] {
        for sigma in [0.5, 1.0, 2.0] {
            for s in [-2.0, -1.0, 1.0, 2.0] {
                let mut m = power_moments(mu, sigma, s).map_err(CliError::from)?;
                m.e6 += args.self_test_perturb;
                let e1 = (g1(&m).map_err(CliError::from)? - sigma).abs();
                let e2 = (g2(&m).map_err(CliError::from)? - mu).abs();
                if e1 > 1e-9 || e2 > 1e-9 {
                    all_ok = false;
                }
                csv.push_row(vec![
                    fmt_f64(mu),
                    fmt_f64(sigma),
                    fmt_f64(s),
                    fmt_f64(e1),
                    fmt_f64(e2),
                ]);
            }
        }
    }
    write_file(&args.out, "verify.csv", &csv.to_string())?;
    if all_ok {
        println!("verify: all 48 fixed-point identities hold to 1e-9");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("verify: fixed-point identities violated (see verify.csv)");
        Ok(ExitCode::from(1))
    }
}
