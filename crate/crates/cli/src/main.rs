//! `hevt`: tail index estimation from block maxima.
//!
//! Exit codes: 0 on success, 2 for usage or parameter errors, 3 for
//! unreadable or malformed data.

mod plot;

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hybrid_evt::estimators::{
    bias_correct, cursory, default_theta, h2, hill_classic, select_k0, SecondOrderSpec,
};
use hybrid_evt::simulation::{
    run_experiment, sweep_k0, write_summary_csv, ExperimentConfig, K0Rule,
};
use hybrid_evt::theory::run_checks;
use hybrid_evt::{block_maxima, fit_gev, DistributionSpec, Estimator, EvtError, RawSample};

#[derive(Debug, Parser)]
#[command(
    name = "hevt",
    version,
    about = "Hybrid block-maxima tail index estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the tail index of a data file.
    ///
    /// Prints one CSV line: estimator,gamma_hat,k0,m,k,correction
    /// (for gev-mle: estimator,mu,sigma,gamma,loglik,converged).
    Estimate(EstimateArgs),
    /// Run a Monte Carlo experiment from a JSON config.
    Simulate(RunArgs),
    /// Run an experiment across block sizes, optionally overriding the grid.
    SweepM(SweepMArgs),
    /// Run a k0 sweep at a single block size.
    SweepK0(SweepK0Args),
    /// Evaluate the limit-theory oracles for a distribution family.
    CheckTheory(CheckTheoryArgs),
    /// Render a summary CSV as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum K0RuleArg {
    Fixed,
    Fraction,
    Amse,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Newline-delimited numbers or a single-column CSV.
    #[arg(long)]
    input: PathBuf,
    /// Skip the first non-comment line.
    #[arg(long)]
    header: bool,
    #[arg(long, default_value_t = 1)]
    block_size: usize,
    #[arg(long, default_value = "h2", value_parser = parse_estimator)]
    estimator: Estimator,
    /// Number of upper block maxima (required for the fixed rule).
    #[arg(long)]
    k0: Option<usize>,
    #[arg(long, value_enum, default_value = "fixed")]
    k0_rule: K0RuleArg,
    #[arg(long, default_value_t = 0.25)]
    fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Use m*k instead of k in the AMSE rule.
    #[arg(long)]
    catalyst: bool,
    /// Cursory intermediate sequence; defaults to ceil(k^0.6).
    #[arg(long)]
    theta: Option<usize>,
    /// Family metadata for the second-order form (pareto, frechet, cauchy, burr, gev, gpd).
    #[arg(long)]
    family: Option<String>,
    /// Fixed second-order parameter; selects the power form.
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<f64>,
    /// Print a header line before the result.
    #[arg(long)]
    with_header: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads (default: config value, then available parallelism).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct SweepMArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated block sizes replacing the config grid.
    #[arg(long, value_delimiter = ',')]
    m_grid: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
struct SweepK0Args {
    #[command(flatten)]
    run: RunArgs,
    /// Block size replacing the config grid.
    #[arg(long)]
    m: Option<usize>,
    /// Comma-separated k0 values replacing the config rule.
    #[arg(long, value_delimiter = ',')]
    k0_grid: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
struct CheckTheoryArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 1e6)]
    t: f64,
    /// Comma-separated evaluation points.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    x: Vec<f64>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "m")]
    x_column: plot::XColumn,
    #[arg(long, value_enum, default_value = "mean_estimate")]
    y_column: plot::YColumn,
    #[arg(long, value_enum, default_value = "estimator")]
    series_by: plot::SeriesBy,
    /// Horizontal reference line, typically the true gamma.
    #[arg(long, allow_hyphen_values = true)]
    reference_line: Option<f64>,
    #[arg(long)]
    output: PathBuf,
}

fn parse_estimator(s: &str) -> Result<Estimator, String> {
    Estimator::from_label(s).ok_or_else(|| {
        let known: Vec<_> = Estimator::ALL.iter().map(|e| e.label()).collect();
        format!(
            "unknown estimator `{s}` (expected one of {})",
            known.join(", ")
        )
    })
}

/// Failure carrying the exit code it maps to.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

impl From<EvtError> for CliError {
    fn from(e: EvtError) -> Self {
        if e.is_parameter_error() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn io_data(path: &Path, e: io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Simulate(a) => cmd_simulate(a, Sweep::None),
        Command::SweepM(a) => cmd_simulate(a.run, Sweep::M(a.m_grid)),
        Command::SweepK0(a) => cmd_simulate(a.run, Sweep::K0(a.m, a.k0_grid)),
        Command::CheckTheory(a) => cmd_check_theory(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hevt: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn family_spec(family: &str, gamma: Option<f64>, rho: Option<f64>) -> CliResult<DistributionSpec> {
    let need_gamma =
        || gamma.ok_or_else(|| CliError::Usage(format!("--gamma is required for family {family}")));
    let spec = match family.to_ascii_lowercase().as_str() {
        "pareto" => DistributionSpec::pareto(need_gamma()?)?,
        "frechet" => DistributionSpec::frechet(need_gamma()?)?,
        "cauchy" => DistributionSpec::cauchy(),
        "burr" => {
            let rho =
                rho.ok_or_else(|| CliError::Usage("--rho is required for family burr".into()))?;
            DistributionSpec::burr(need_gamma()?, rho)?
        }
        "gev" => DistributionSpec::gev(need_gamma()?)?,
        "gpd" => DistributionSpec::gpd(need_gamma()?)?,
        other => return Err(CliError::Usage(format!("unknown family `{other}`"))),
    };
    Ok(spec)
}

fn second_order_for(family: Option<&str>, rho: Option<f64>) -> CliResult<SecondOrderSpec> {
    if let Some(rho) = rho {
        return Ok(SecondOrderSpec::power(rho, None)?);
    }
    match family.map(str::to_ascii_lowercase).as_deref() {
        None | Some("pareto" | "frechet" | "cauchy") => Ok(SecondOrderSpec::shift()),
        Some("gev" | "gpd") => Ok(SecondOrderSpec::gev_gpd()),
        Some("burr") => Err(CliError::Usage("family burr needs --rho".into())),
        Some(other) => Err(CliError::Usage(format!("unknown family `{other}`"))),
    }
}

fn cmd_estimate(args: EstimateArgs) -> CliResult {
    let file = File::open(&args.input).map_err(|e| io_data(&args.input, e))?;
    let raw = RawSample::from_reader(BufReader::new(file), args.header)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let sample = block_maxima(&raw, args.block_size)?;
    let k = sample.k();
    let mut out = io::stdout().lock();

    if args.estimator == Estimator::GevMle {
        let (params, loglik, converged) = match fit_gev(sample.sorted_maxima()) {
            Ok(fit) => (fit.params, fit.loglik, true),
            Err(EvtError::Convergence { best, loglik, .. }) => (best, loglik, false),
            Err(e) => return Err(e.into()),
        };
        if args.with_header {
            writeln!(out, "estimator,mu,sigma,gamma,loglik,converged").ok();
        }
        writeln!(
            out,
            "gev-mle,{},{},{},{},{}",
            params.mu, params.sigma, params.gamma, loglik, converged
        )
        .ok();
        return Ok(());
    }

    let so = second_order_for(args.family.as_deref(), args.rho)?;
    let theta = args.theta.unwrap_or_else(|| default_theta(k, 0.6));
    let k0 = match args.k0_rule {
        K0RuleArg::Fixed => args
            .k0
            .ok_or_else(|| CliError::Usage("--k0 is required with the fixed k0 rule".into()))?,
        K0RuleArg::Fraction => {
            if !(args.fraction > 0.0 && args.fraction < 1.0) {
                return Err(CliError::Usage(format!(
                    "--fraction must lie in (0, 1), got {}",
                    args.fraction
                )));
            }
            ((args.fraction * k as f64).ceil() as usize).clamp(1, k.saturating_sub(1).max(1))
        }
        K0RuleArg::Amse => {
            if !(args.beta > 0.0 && args.beta.is_finite()) {
                return Err(CliError::Usage(format!(
                    "--beta must be positive, got {}",
                    args.beta
                )));
            }
            select_k0(k, sample.m(), &so, args.beta, args.catalyst)
        }
    };

    let est = match args.estimator {
        Estimator::H2 => h2(&sample, k0)?,
        Estimator::Hill => hill_classic(&raw, k0)?,
        Estimator::Cursory => cursory(&sample, theta)?,
        Estimator::Rbh2r | Estimator::Rbh2 => {
            let so = if args.estimator == Estimator::Rbh2r {
                SecondOrderSpec::shift()
            } else if matches!(so.form, hybrid_evt::SecondOrderForm::Shift) {
                SecondOrderSpec::gev_gpd()
            } else {
                so
            };
            let raw_est = h2(&sample, k0)?;
            let surrogate = cursory(&sample, theta)?;
            let mut e = bias_correct(&raw_est, surrogate.gamma_hat, &so)?;
            e.theta = theta;
            e
        }
        Estimator::GevMle => unreachable!("handled above"),
    };
    if args.with_header {
        writeln!(out, "estimator,gamma_hat,k0,m,k,correction").ok();
    }
    writeln!(
        out,
        "{},{},{},{},{},{}",
        est.estimator, est.gamma_hat, est.k0, est.m, est.k, est.correction
    )
    .ok();
    Ok(())
}

enum Sweep {
    None,
    M(Option<Vec<usize>>),
    K0(Option<usize>, Option<Vec<usize>>),
}

fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| io_data(path, e))?;
    let mut config: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if let Ok(seed) = std::env::var("EVT_SEED") {
        config.master_seed = seed.trim().parse().map_err(|_| {
            CliError::Usage(format!(
                "EVT_SEED `{seed}` is not a 64-bit unsigned integer"
            ))
        })?;
    }
    Ok(config)
}

fn cmd_simulate(args: RunArgs, sweep: Sweep) -> CliResult {
    let mut config = load_config(&args.config)?;
    match &sweep {
        Sweep::None => {}
        Sweep::M(grid) => {
            if let Some(grid) = grid {
                config.m_grid = grid.clone();
            }
        }
        Sweep::K0(m, grid) => {
            if let Some(m) = m {
                config.m_grid = vec![*m];
            }
            if let Some(grid) = grid {
                config.k0_rule = K0Rule::Grid(grid.clone());
            }
        }
    }
    config.validate()?;
    let workers = args
        .workers
        .or(config.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let rows = match sweep {
        Sweep::K0(..) => sweep_k0(&config, workers)?,
        _ => run_experiment(&config, workers)?,
    };
    let skipped: usize = rows.iter().map(|r| r.skipped).sum();
    if skipped > 0 {
        eprintln!("hevt: {skipped} estimator evaluations were skipped (preconditions not met)");
    }
    match &args.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_data(path, e))?;
            let mut w = io::BufWriter::new(file);
            write_summary_csv(&rows, &mut w).map_err(|e| io_data(path, e))?;
            w.flush().map_err(|e| io_data(path, e))?;
        }
        None => {
            write_summary_csv(&rows, io::stdout().lock())
                .map_err(|e| CliError::Data(format!("stdout: {e}")))?;
        }
    }
    Ok(())
}

fn cmd_check_theory(args: CheckTheoryArgs) -> CliResult {
    let spec = family_spec(&args.family, args.gamma, args.rho)?;
    let rows = run_checks(&spec, args.m, args.t, &args.x)?;
    let mut out = csv::Writer::from_writer(io::stdout().lock());
    let data = |e: csv::Error| CliError::Data(e.to_string());
    out.write_record(["check", "x", "value", "limit", "rel_error"])
        .map_err(data)?;
    for r in rows {
        out.write_record([
            r.check.to_string(),
            r.x.to_string(),
            r.value.to_string(),
            r.limit.to_string(),
            r.rel_error.to_string(),
        ])
        .map_err(data)?;
    }
    out.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> CliResult {
    let file = File::open(&args.input).map_err(|e| io_data(&args.input, e))?;
    let spec = plot::PlotSpec {
        x_column: args.x_column,
        y_column: args.y_column,
        series_by: args.series_by,
        reference_line: args.reference_line,
    };
    let series = plot::read_series(file, &spec)?;
    let svg = plot::render_svg(&series, &spec);
    std::fs::write(&args.output, svg).map_err(|e| io_data(&args.output, e))?;
    Ok(())
}
