//! `privexp`: exponents, sweeps, approximations, Gaussian curves and
//! simulations from the command line.

mod commands;
mod grid;
mod manifest;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use privexp_core::Error;

#[derive(Parser, Debug)]
#[command(name = "privexp", version, about = "Type-II error exponents under privacy constraints")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "PRIVEXP_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exponent of a single (R, L) point, as JSON.
    Exponent(ExponentArgs),
    /// Exponent curves over an (R, L) grid, as CSV.
    Sweep(SweepArgs),
    /// Exact exponent against the chi-square approximation, as CSV.
    Approx(ApproxArgs),
    /// Gaussian closed form over a (rho, R, L) grid, as CSV.
    Gaussian(GaussianArgs),
    /// Monte Carlo run of a coding scheme, as JSON.
    Simulate(SimulateArgs),
    /// Oracle checks with a deterministic JSON report.
    Selftest(SelftestArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Thm1,
    Tai,
    ZeroRate,
    Binary,
    Cor2,
}

/// Where the null (and alternative) laws come from.
#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct Source {
    /// Null joint law P_XY (JSON file).
    #[arg(long, conflicts_with = "q")]
    pub null: Option<PathBuf>,
    /// Use the doubly symmetric binary source with crossover q as the null.
    #[arg(long)]
    pub q: Option<f64>,
    /// Alternative joint law Q_XY (JSON file).
    #[arg(long, conflicts_with = "independent")]
    pub alt: Option<PathBuf>,
    /// Use the product of the null marginals as the alternative.
    #[arg(long)]
    pub independent: bool,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct SearchArgs {
    /// Outer grid spacing over channel entries.
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Local refinement rounds after the grid.
    #[arg(long)]
    pub refine_rounds: Option<usize>,
    /// |U| for the search.
    #[arg(long)]
    pub u_card: Option<usize>,
    /// Restrict the search to symmetric channels.
    #[arg(long)]
    pub symmetric: bool,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct ExponentArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value_t = 0.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 0.0)]
    pub leak: f64,
    /// Type-I error bound; echoed only.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value = "tai")]
    pub method: Method,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Output file (default: stdout, no manifest).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMethod {
    /// Numeric optimizer.
    Tai,
    /// Binary closed form (needs --q).
    Binary,
    /// Chi-square approximation only.
    Approx,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: Source,
    /// Rates: a list `a,b,c` or an inclusive range `start:stop:step`.
    #[arg(long, default_value = "0.1,0.25,0.5,1.0")]
    pub rate: String,
    /// Leakages, same syntax as --rate.
    #[arg(long, default_value = "0:1:0.02")]
    pub leak: String,
    #[arg(long, value_enum, default_value = "tai")]
    pub method: SweepMethod,
    /// Add theta_approx and rel_err columns.
    #[arg(long)]
    pub with_approx: bool,
    /// Use R = L over the --leak values instead of the full grid.
    #[arg(long)]
    pub diagonal: bool,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct ApproxArgs {
    #[command(flatten)]
    pub source: Source,
    /// Diagonal points R = L.
    #[arg(long, default_value = "0.005,0.01,0.02")]
    pub points: String,
    /// Exact side: numeric optimizer or the binary closed form.
    #[arg(long, value_enum, default_value = "tai")]
    pub method: SweepMethod,
    /// Solve the approximation numerically even for a binary source.
    #[arg(long)]
    pub general: bool,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct GaussianArgs {
    /// Correlations, list or range.
    #[arg(long, default_value = "0.9")]
    pub rho: String,
    #[arg(long, default_value = "0:2:0.25")]
    pub rate: String,
    /// Leakages; `inf` means no privacy constraint.
    #[arg(long, default_value = "0.5,1,inf")]
    pub leak: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeArg {
    General,
    Memoryless,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HypothesisArg {
    Null,
    Alt,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct SimulateArgs {
    /// Scheme config: scheme fields plus "null" (and optional "alt") laws.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Without --config: DSBS(q) source at the binary optimum for (--rate, --leak).
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub leak: Option<f64>,
    /// Typicality radius (default n^(-1/3)).
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    #[arg(long, value_enum)]
    pub hypothesis: Option<HypothesisArg>,
    #[arg(long)]
    pub batches: Option<usize>,
    #[arg(long)]
    pub fixed_codebook: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Command failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub msg: String,
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self { code: 2, msg: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Infeasible(_)
            | Error::NonConvergence(_)
            | Error::InfeasibleBeta(_)
            | Error::SupportMismatch(_)
            | Error::Internal(_) => 3,
            Error::SizeOverflow { max_n, .. } => {
                return Self {
                    code: 4,
                    msg: format!("{e}; lower --n to at most {max_n} or reduce the rate"),
                }
            }
            _ => 2,
        };
        Self { code, msg: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::usage(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    match commands::run(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
