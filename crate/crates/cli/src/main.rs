//! `taildep`: stream a bivariate series and estimate tail dependence online.
//!
//! Subcommands: `track` ingests delimiter-separated pairs from a file or
//! stdin and emits periodic estimate reports; `simulate` runs seeded
//! synthetic experiments and writes JSON/CSV reports; `bench` measures
//! insert latency and summary size.
//!
//! Exit codes: 0 success, 2 configuration error, 3 input parse error,
//! 4 I/O error.

mod commands;
mod report;

use std::fmt;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tailstream::{ErrorMode, PairDistribution};

#[derive(Parser)]
#[command(name = "taildep", version, about = "Streaming tail dependence estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maintain a summary over a paired input stream and report estimates.
    Track(TrackArgs),
    /// Run a synthetic-stream experiment and write its report.
    Simulate(SimulateArgs),
    /// Measure insert latency and final summary size on a synthetic stream.
    Bench(BenchArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Accuracy parameter in (0, 0.5].
    #[arg(long, env = "TAILDEP_EPSILON", default_value_t = 0.1)]
    epsilon: f64,
    /// Rank-error invariant the summaries maintain.
    #[arg(long, value_enum, env = "TAILDEP_MODE", default_value_t = ModeArg::Biased)]
    mode: ModeArg,
}

impl CommonArgs {
    fn error_mode(&self) -> Result<ErrorMode, CliError> {
        let build = match self.mode {
            ModeArg::Biased => ErrorMode::biased(self.epsilon),
            ModeArg::Uniform => ErrorMode::uniform(self.epsilon),
        };
        build.map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Biased,
    Uniform,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistributionArg {
    Gaussian,
    Beta,
    Comonotone,
    Antimonotone,
    Independent,
}

impl From<DistributionArg> for PairDistribution {
    fn from(d: DistributionArg) -> Self {
        match d {
            DistributionArg::Gaussian => PairDistribution::GaussianPair,
            DistributionArg::Beta => PairDistribution::BetaPair,
            DistributionArg::Comonotone => PairDistribution::Comonotone,
            DistributionArg::Antimonotone => PairDistribution::Antimonotone,
            DistributionArg::Independent => PairDistribution::IndependentUniform,
        }
    }
}

/// An `u1,u2` copula evaluation point.
#[derive(Clone, Copy, Debug, PartialEq)]
struct EvalPoint {
    u1: f64,
    u2: f64,
}

impl FromStr for EvalPoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| format!("expected u1,u2 but got '{s}'"))?;
        let parse = |t: &str| -> Result<f64, String> {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| format!("'{t}' is not a number"))?;
            if v > 0.0 && v <= 1.0 {
                Ok(v)
            } else {
                Err(format!("evaluation point {v} outside (0, 1]"))
            }
        };
        Ok(EvalPoint { u1: parse(a)?, u2: parse(b)? })
    }
}

#[derive(Args)]
struct TrackArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Input path, or '-' for stdin.
    #[arg(long)]
    input: String,
    /// Column delimiter.
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Skip the first line as a header.
    #[arg(long)]
    header: bool,
    /// Lower tail rank.
    #[arg(long = "i", default_value_t = 25)]
    tail_lower_i: u64,
    /// Upper tail offset from the top.
    #[arg(long, default_value_t = 25)]
    upper_offset: u64,
    /// Copula evaluation point u1,u2; repeatable.
    #[arg(long = "eval")]
    eval_points: Vec<EvalPoint>,
    /// Emit a report every this many records.
    #[arg(long, default_value_t = 5000)]
    report_every: u64,
    /// Output path for report lines, or '-' for stdout.
    #[arg(long, default_value = "-")]
    output: String,
    #[arg(long, value_enum, env = "TAILDEP_FORMAT", default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Write a summary snapshot here when the input is exhausted.
    #[arg(long)]
    checkpoint: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = DistributionArg::Gaussian)]
    distribution: DistributionArg,
    /// Correlation parameter for the gaussian/beta distributions.
    #[arg(long, default_value_t = 0.8)]
    rho: f64,
    /// Stream length.
    #[arg(long, default_value_t = 30_000)]
    n: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Measure every this many inserts.
    #[arg(long, default_value_t = 5000)]
    checkpoint_every: u64,
    /// Tail rank/offset to evaluate; repeatable.
    #[arg(long = "i", default_values_t = [25u64])]
    tail_indices: Vec<u64>,
    /// Copula evaluation point u1,u2; repeatable.
    #[arg(long = "eval")]
    eval_points: Vec<EvalPoint>,
    /// Run biased and uniform modes over the identical stream.
    #[arg(long)]
    compare_modes: bool,
    /// Output path, or '-' for stdout.
    #[arg(long, default_value = "-")]
    output: String,
    #[arg(long, value_enum, env = "TAILDEP_FORMAT", default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = DistributionArg::Gaussian)]
    distribution: DistributionArg,
    #[arg(long, default_value_t = 0.8)]
    rho: f64,
    #[arg(long, default_value_t = 100_000)]
    n: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Command failures carrying their process exit code.
#[derive(Debug)]
enum CliError {
    Config(String),
    Parse { line: u64, message: String },
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Parse { .. } => 3,
            CliError::Io(_) => 4,
        }
    }

    fn io(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Track(args) => commands::track(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Bench(args) => commands::bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("taildep: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
