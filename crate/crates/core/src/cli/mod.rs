//! Command-line front end.
//!
//! Every failure is reported as a single stderr line of the form
//! `error[<kind>]: <message>` with kind one of `usage`, `io`, `parse` or
//! `pipeline`, and a nonzero exit status.

pub mod csvio;
pub mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use crate::calibration::{calibrate_splines, calibrate_wavelets_at_level, estimate_weights, DEFAULT_WAVELET};
use crate::model::{aggregate_curve, AggregatedSamples, ComponentCurves, SampleGrid, WeightMatrix};
use crate::shrinkage::{Method, RuleType, ShrinkageSpec};
use crate::simulate::{simulate_dataset, SimulationConfig};

pub const SEED_ENV: &str = "FUNCAL_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: u64,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Pipeline(#[from] crate::error::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Pipeline(_) => "pipeline",
        }
    }

    /// The one-line stderr form.
    pub fn render(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error[{}]: {}", self.kind(), msg)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "funcal",
    version,
    about = "Estimate component curves from weighted aggregate curves"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a simulated two-component dataset as CSV files.
    Simulate(SimulateArgs),
    /// Estimate component curves from aggregated samples and weights.
    Calibrate(CalibrateArgs),
    /// Estimate the weights of one sample given component curves.
    Weights(WeightsArgs),
    /// Combine component curves with a weight vector.
    Aggregate(AggregateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of samples N.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Number of grid points M.
    #[arg(long, default_value_t = 1024)]
    pub m: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise_sd: f64,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Write a header row in every CSV.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Basis {
    Wavelets,
    Splines,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// M x N aggregated samples, one column per sample.
    #[arg(long)]
    pub data: PathBuf,
    /// L x N weights, one column per sample.
    #[arg(long)]
    pub weights: PathBuf,
    /// M x 1 domain values; defaults to 1..M.
    #[arg(long)]
    pub x: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Basis::Wavelets)]
    pub basis: Basis,
    #[arg(long, default_value = DEFAULT_WAVELET)]
    pub wavelet: String,
    #[arg(long, default_value = "bayesian")]
    pub method: Method,
    #[arg(long, default_value_t = crate::shrinkage::DEFAULT_TAU)]
    pub tau: f64,
    /// Global prior mass; level-dependent when absent.
    #[arg(long)]
    pub p: Option<f64>,
    /// Noise scale; MAD estimate when absent.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Monte Carlo integration for the Bayesian rule (requires a seed).
    #[arg(long)]
    pub mc: bool,
    #[arg(long, default_value_t = 10_000)]
    pub mc_samples: usize,
    #[arg(long, default_value_t = 64)]
    pub quad_nodes: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha_prob: f64,
    #[arg(long = "type", default_value = "soft")]
    pub rule_type: RuleType,
    /// Add a small ridge to the weight Gram matrix.
    #[arg(long)]
    pub singular: bool,
    /// Coarsest decomposition level.
    #[arg(long, default_value_t = 0)]
    pub j0: usize,
    /// Estimate the noise scale from all samples.
    #[arg(long)]
    pub pooled_sigma: bool,
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 12)]
    pub n_functions: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Write one SVG per estimated component.
    #[arg(long)]
    pub plot: bool,
    /// Input CSVs carry a header row; outputs get one too.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    /// CSV whose selected column is the sample.
    #[arg(long)]
    pub sample: PathBuf,
    /// 1-based column of the sample CSV.
    #[arg(long, default_value_t = 1)]
    pub column: usize,
    /// M x L component curves.
    #[arg(long)]
    pub alphas: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// M x L component curves.
    #[arg(long)]
    pub alphas: PathBuf,
    /// Comma-separated weights, one per component.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub weights: Vec<f64>,
    #[arg(long)]
    pub x: Option<PathBuf>,
    #[arg(long, default_value = "aggregated.csv")]
    pub out: PathBuf,
    /// SVG path for a line chart of the combined curve.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[arg(long, default_value = "Aggregated curve")]
    pub title: String,
    #[arg(long)]
    pub header: bool,
}

fn header_row(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn read_grid(path: Option<&Path>, m: usize, header: bool) -> Result<SampleGrid, CliError> {
    let Some(path) = path else {
        return Ok(SampleGrid::index(m)?);
    };
    let x = csvio::read_matrix(path, header)?;
    if x.ncols() != 1 {
        return Err(CliError::Usage(format!(
            "{}: expected a single column, found {}",
            path.display(),
            x.ncols()
        )));
    }
    Ok(SampleGrid::new(x.as_slice().to_vec())?)
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let ds = simulate_dataset(&SimulationConfig {
        samples: args.n,
        points: args.m,
        noise_sd: args.noise_sd,
        seed: args.seed,
        ..SimulationConfig::default()
    })?;
    ensure_dir(&args.out_dir)?;
    let h = |prefix: &str, count: usize| args.header.then(|| header_row(prefix, count));
    let x = DMatrix::from_column_slice(ds.x.len(), 1, ds.x.points());
    let files = [
        ("data.csv", ds.data.values(), h("sample", args.n)),
        ("weights.csv", ds.weights.values(), h("sample", args.n)),
        ("x.csv", &x, args.header.then(|| vec!["x".to_string()])),
        ("alphas.csv", ds.alphas.values(), h("alpha", 2)),
    ];
    for (name, m, header) in files {
        csvio::write_matrix(&args.out_dir.join(name), m, header.as_deref())?;
    }
    Ok(())
}

pub fn calibrate(args: &CalibrateArgs) -> Result<(), CliError> {
    if args.mc && args.seed.is_none() {
        return Err(CliError::Usage(format!(
            "--mc needs a seed for reproducible Monte Carlo integration: pass --seed or set {SEED_ENV}"
        )));
    }
    let data = AggregatedSamples::new(csvio::read_matrix(&args.data, args.header)?)?;
    let weights = WeightMatrix::new(csvio::read_matrix(&args.weights, args.header)?)?;
    let grid = read_grid(args.x.as_deref(), data.nrows(), args.header)?;

    let result = match args.basis {
        Basis::Wavelets => {
            let spec = ShrinkageSpec {
                method: args.method,
                rule_type: args.rule_type,
                tau: args.tau,
                p: args.p,
                sigma: args.sigma,
                mc: args.mc,
                mc_samples: args.mc_samples,
                quad_nodes: args.quad_nodes,
                alpha_prob: args.alpha_prob,
                seed: args.seed.unwrap_or(0),
                pooled_sigma: args.pooled_sigma,
            };
            calibrate_wavelets_at_level(&data, &weights, &grid, &args.wavelet, &spec, args.singular, args.j0)?
        }
        Basis::Splines => calibrate_splines(&data, &weights, &grid, args.n_functions)?,
    };

    ensure_dir(&args.out_dir)?;
    let curves = result.curves.values();
    let l = curves.ncols();
    let header = args.header.then(|| header_row("alpha", l));
    csvio::write_matrix(&args.out_dir.join("alphas.csv"), curves, header.as_deref())?;

    let mut diag = String::new();
    for (k, v) in result.diagnostics.key_values() {
        diag.push_str(&format!("{k}={v}\n"));
    }
    write_text(&args.out_dir.join("diagnostics.txt"), &diag)?;

    if args.plot {
        for c in 0..l {
            let y: Vec<f64> = curves.column(c).iter().copied().collect();
            let title = format!("Estimated alpha {} ({})", c + 1, result.diagnostics.basis);
            let chart = svg::line_chart(grid.points(), &y, &title, "x", &format!("alpha{}", c + 1));
            write_text(&args.out_dir.join(format!("alpha_{}.svg", c + 1)), &chart)?;
        }
    }
    Ok(())
}

/// Reads the inputs and returns the estimated weights.
pub fn weights_estimate(args: &WeightsArgs) -> Result<Vec<f64>, CliError> {
    let sample = csvio::read_matrix(&args.sample, args.header)?;
    if args.column == 0 || args.column > sample.ncols() {
        return Err(CliError::Usage(format!(
            "--column {} out of range: {} has {} columns",
            args.column,
            args.sample.display(),
            sample.ncols()
        )));
    }
    let sample: Vec<f64> = sample.column(args.column - 1).iter().copied().collect();
    let curves = ComponentCurves::new(csvio::read_matrix(&args.alphas, args.header)?)?;
    Ok(estimate_weights(&sample, &curves)?)
}

pub fn weights(args: &WeightsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let w = weights_estimate(args)?;
    let stdout = |e| CliError::io(Path::new("<stdout>"), e);
    for v in &w {
        writeln!(out, "{}", format_significant(*v, 10)).map_err(stdout)?;
    }
    if let Some(path) = &args.out {
        let m = DMatrix::from_column_slice(w.len(), 1, &w);
        let header = args.header.then(|| vec!["weight".to_string()]);
        csvio::write_matrix(path, &m, header.as_deref())?;
    }
    Ok(())
}

pub fn aggregate(args: &AggregateArgs) -> Result<(), CliError> {
    let curves = ComponentCurves::new(csvio::read_matrix(&args.alphas, args.header)?)?;
    let combined = aggregate_curve(&curves, &args.weights)?;
    let header = args.header.then(|| vec!["aggregate".to_string()]);
    let m = DMatrix::from_column_slice(combined.len(), 1, combined.as_slice());
    csvio::write_matrix(&args.out, &m, header.as_deref())?;
    if let Some(plot) = &args.plot {
        let grid = read_grid(args.x.as_deref(), curves.nrows(), args.header)?;
        let chart = svg::line_chart(grid.points(), combined.as_slice(), &args.title, "x", "aggregate");
        write_text(plot, &chart)?;
    }
    Ok(())
}

/// `v` rounded to `digits` significant digits, without trailing zeros.
pub fn format_significant(v: f64, digits: usize) -> String {
    let s = format!("{:.*e}", digits - 1, v);
    let parsed: f64 = s.parse().unwrap_or(v);
    format!("{parsed}")
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Weights(a) => weights(a, out),
        Command::Aggregate(a) => aggregate(a),
    }
}

/// Parses the process arguments, runs the command and maps the outcome to
/// an exit status.
pub fn main_entry() -> ExitCode {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", CliError::Usage(first.to_string()).render());
            return ExitCode::from(2);
        }
    };
    let stdout = std::io::stdout();
    match dispatch(&cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.render());
            ExitCode::FAILURE
        }
    }
}
