//! Command-line front end.
//!
//! Exit status: 0 success, 1 verification failure (report still written),
//! 2 usage, configuration or input error, 3 I/O error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gamker_core::{
    estimate_on_grid, Bandwidth, BandwidthSchedule, ProcessSpec, RegressionFn, SeededRng,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, GridSpec};
use crate::error::{Error, Result};
use crate::harness;
use crate::io::{ingest_csv, write_atomic, write_sample_csv, write_series_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "gamker",
    version,
    about = "Gamma-kernel density and regression estimation for non-negative data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate density (and regression) curves from a CSV file.
    Estimate(EstimateArgs),
    /// Write a simulated sample as CSV.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo verification experiment from a TOML config.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "x-col")]
    pub x_col: String,
    #[arg(long = "y-col")]
    pub y_col: Option<String>,
    /// Fixed bandwidth.
    #[arg(
        long,
        required_unless_present = "schedule",
        conflicts_with = "schedule"
    )]
    pub h: Option<f64>,
    /// Bandwidth schedule `c=..,alpha=..` giving h = c n^-alpha.
    #[arg(long, value_parser = parse_schedule)]
    pub schedule: Option<BandwidthSchedule>,
    /// Grid `a=..,b=..,count=..`.
    #[arg(long, value_parser = parse_grid)]
    pub grid: GridSpec,
    #[arg(long)]
    pub out: PathBuf,
    /// Summary path; defaults to the output path with extension `summary.json`.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProcessKind {
    IidExponential,
    IidGamma,
    Ear1,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RegFnKind {
    Rational,
    LinearSat,
    Constant,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub process: ProcessKind,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub shape: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long = "burn-in", default_value_t = gamker_core::processes::DEFAULT_BURN_IN)]
    pub burn_in: usize,
    /// Add responses R(x) eta with this regression function.
    #[arg(long, value_enum)]
    pub regfn: Option<RegFnKind>,
    /// Value of the constant regression function.
    #[arg(long, default_value_t = 1.0)]
    pub constant: f64,
    #[arg(long = "noise-var", default_value_t = 0.0)]
    pub noise_var: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = default_workers())]
    pub workers: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the replication count in the config file.
    #[arg(long)]
    pub replications: Option<usize>,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Parses `k1=v1,k2=v2` into pairs, rejecting keys outside `allowed`.
fn key_values(text: &str, allowed: &[&str]) -> std::result::Result<Vec<(String, f64)>, String> {
    text.split(',')
        .map(|part| {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got {part:?}"))?;
            let k = k.trim();
            if !allowed.contains(&k) {
                return Err(format!("unknown key {k:?}, expected one of {allowed:?}"));
            }
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| format!("{k}: cannot parse {v:?}"))?;
            Ok((k.to_string(), v))
        })
        .collect()
}

fn lookup(pairs: &[(String, f64)], key: &str) -> std::result::Result<f64, String> {
    pairs
        .iter()
        .rev()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| format!("missing key {key:?}"))
}

fn parse_schedule(text: &str) -> std::result::Result<BandwidthSchedule, String> {
    let pairs = key_values(text, &["c", "alpha"])?;
    BandwidthSchedule::new(lookup(&pairs, "c")?, lookup(&pairs, "alpha")?)
        .map_err(|e| e.to_string())
}

fn parse_grid(text: &str) -> std::result::Result<GridSpec, String> {
    let pairs = key_values(text, &["a", "b", "count"])?;
    let count = lookup(&pairs, "count")?;
    if count.fract() != 0.0 || count < 0.0 {
        return Err(format!("count must be a whole number, got {count}"));
    }
    let grid = GridSpec {
        a: lookup(&pairs, "a")?,
        b: lookup(&pairs, "b")?,
        count: count as usize,
    };
    grid.build().map_err(|e| e.to_string())?;
    Ok(grid)
}

#[derive(Serialize)]
struct EstimateSummary<'a> {
    input: &'a Path,
    x_col: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    y_col: Option<&'a str>,
    n: usize,
    h: f64,
    bandwidth: Bandwidth,
    grid: GridSpec,
    starved_points: usize,
}

fn summary_path(args: &EstimateArgs) -> PathBuf {
    args.summary
        .clone()
        .unwrap_or_else(|| args.out.with_extension("summary.json"))
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<i32> {
    let started = Instant::now();
    let sample = ingest_csv(&args.input, &args.x_col, args.y_col.as_deref())?;
    let bandwidth = match (args.h, args.schedule) {
        (Some(h), _) => Bandwidth::Fixed { h },
        (None, Some(s)) => Bandwidth::Schedule(s),
        (None, None) => return Err(Error::Config("either --h or --schedule is required".into())),
    };
    let h = bandwidth.at(sample.len() as u64)?;
    let grid = args.grid.build()?;
    let series = estimate_on_grid(&sample, &grid, h, args.y_col.is_some())?;
    let summary = EstimateSummary {
        input: &args.input,
        x_col: &args.x_col,
        y_col: args.y_col.as_deref(),
        n: sample.len(),
        h,
        bandwidth,
        grid: args.grid,
        starved_points: series
            .starved
            .as_ref()
            .map_or(0, |s| s.iter().filter(|b| **b).count()),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");

    write_series_csv(&args.out, &series)?;
    write_atomic(&summary_path(args), |w| writeln!(w, "{json}"))?;
    eprintln!(
        "estimated {} grid points from n = {} at h = {h} in {:.3} s",
        grid.len(),
        sample.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(EXIT_OK)
}

fn simulate_spec(args: &SimulateArgs) -> ProcessSpec {
    let base = match args.process {
        ProcessKind::IidExponential => ProcessSpec::IidExponential { rate: args.lambda },
        ProcessKind::IidGamma => ProcessSpec::IidGamma {
            shape: args.shape,
            scale: args.scale,
        },
        ProcessKind::Ear1 => ProcessSpec::Ear1 {
            rho: args.rho,
            rate: args.lambda,
            burn_in: args.burn_in,
        },
    };
    match args.regfn {
        None => base,
        Some(kind) => ProcessSpec::RegressionOver {
            base: Box::new(base),
            regfn: match kind {
                RegFnKind::Rational => RegressionFn::Rational,
                RegFnKind::LinearSat => RegressionFn::LinearSat,
                RegFnKind::Constant => RegressionFn::Constant(args.constant),
            },
            noise_var: args.noise_var,
        },
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    if args.n == 0 {
        return Err(Error::Config("--n must be positive".into()));
    }
    let spec = simulate_spec(args);
    spec.validate()?;
    let sample = spec.generate(&mut SeededRng::new(args.seed, args.stream), args.n)?;
    let comment = format!(
        "seed={} stream={} process={}",
        args.seed,
        args.stream,
        serde_json::to_string(&spec).expect("spec serializes")
    );
    write_sample_csv(&args.out, &comment, &sample)?;
    Ok(EXIT_OK)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let started = Instant::now();
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(r) = args.replications {
        config.replications = r;
    }
    config.validate()?;
    let report = harness::run(&config, args.workers)?;
    write_atomic(&args.out, |w| w.write_all(report.to_json().as_bytes()))?;
    for check in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {} = {}", check.name, check.observed);
    }
    eprintln!(
        "{:?}: {} in {:.2} s",
        report.experiment,
        if report.passed { "passed" } else { "FAILED" },
        started.elapsed().as_secs_f64()
    );
    Ok(if report.passed {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}

/// Parses `args` (program name first) and runs the chosen subcommand, returning the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match &cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
