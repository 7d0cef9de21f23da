//! `salient`: simulate, fit, rank, evaluate, diagnose, certify and sweep.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors.

// `!(x >= 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod manifest;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use salient_core::SelectionSpec;

/// An error in the user's request rather than in the computation.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser, Debug)]
#[command(name = "salient", version, about = "Salient feature preference model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a synthetic instance and comparisons.
    Simulate(SimulateArgs),
    /// Fit the judgment vector by maximum likelihood.
    Fit(FitArgs),
    /// Rank items by full-feature utility.
    Rank(RankArgs),
    /// Score weights against held-out rankings or comparisons.
    Evaluate(EvaluateArgs),
    /// Count transitivity violations and pairwise inconsistencies.
    Diagnose(DiagnoseArgs),
    /// Identifiability and sample-complexity certificates.
    Theory(TheoryArgs),
    /// Grid over selections, sample sizes and seeds.
    Sweep(SweepArgs),
}

fn parse_selection(s: &str) -> Result<SelectionSpec, String> {
    SelectionSpec::from_json(s).map_err(|e| format!("invalid selection JSON: {e}"))
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(format!("expected an integer >= 1, got `{s}`")),
    }
}

fn parse_delta(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        _ => Err(format!("expected a number in (0, 1), got `{s}`")),
    }
}

fn parse_nonneg(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number >= 0, got `{s}`")),
    }
}

fn parse_positive_real(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number > 0, got `{s}`")),
    }
}

/// How feature files are read.
#[derive(Args, Debug, Serialize)]
pub struct FeatureOpts {
    /// Features CSV (`item_id,f1,...,fd`).
    #[arg(long)]
    pub features: PathBuf,
    /// Subtract each feature's mean and divide by its population std.
    #[arg(long)]
    pub standardize: bool,
    /// Take standardization statistics from this file instead.
    #[arg(long, requires = "standardize")]
    pub stats_from: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_positive)]
    pub d: usize,
    #[arg(long, value_parser = parse_positive)]
    pub n: usize,
    #[arg(long, value_parser = parse_positive)]
    pub m: usize,
    /// Selection spec as JSON, e.g. '{"kind":"top_t","t":1}'.
    #[arg(long, value_parser = parse_selection)]
    pub selection: SelectionSpec,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub features: FeatureOpts,
    /// Comparisons CSV (`winner_id,loser_id,count`).
    #[arg(long)]
    pub comparisons: PathBuf,
    #[arg(long, value_parser = parse_selection)]
    pub selection: SelectionSpec,
    /// Ridge weight on ||w||^2.
    #[arg(long, default_value_t = 0.0, value_parser = parse_nonneg)]
    pub mu: f64,
    /// Gradient-norm tolerance.
    #[arg(long, default_value_t = 1e-8, value_parser = parse_positive_real)]
    pub tol: f64,
    #[arg(long, default_value_t = 5000, value_parser = parse_positive)]
    pub max_iters: usize,
    /// Drop pairs compared fewer than this many times.
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct RankArgs {
    #[command(flatten)]
    pub features: FeatureOpts,
    /// Weights JSON: a fit result, a truth file, or a plain array.
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub features: FeatureOpts,
    #[arg(long)]
    pub weights: PathBuf,
    /// Rankings CSV; reports per-ranker Kendall tau.
    #[arg(long, conflicts_with = "comparisons", required_unless_present = "comparisons")]
    pub rankings: Option<PathBuf>,
    /// Comparisons CSV; reports pairwise accuracy.
    #[arg(long)]
    pub comparisons: Option<PathBuf>,
    #[arg(long, value_parser = parse_selection, default_value = r#"{"kind":"full"}"#)]
    pub selection: SelectionSpec,
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct DiagnoseArgs {
    /// Empirical comparisons CSV.
    #[arg(long, required_unless_present = "weights")]
    pub comparisons: Option<PathBuf>,
    /// Features CSV; required with --weights, optional id source otherwise.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Weights for model probabilities.
    #[arg(long, requires_all = ["features", "selection"])]
    pub weights: Option<PathBuf>,
    #[arg(long, value_parser = parse_selection)]
    pub selection: Option<SelectionSpec>,
    /// Ignore pairs compared fewer than this many times.
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct TheoryArgs {
    #[command(flatten)]
    pub features: FeatureOpts,
    #[arg(long, value_parser = parse_selection)]
    pub selection: SelectionSpec,
    /// True weights; adds b* and ranking-recovery requirements.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1, value_parser = parse_delta)]
    pub delta: f64,
    /// Ranking slack: target Kendall distance at most k - 1.
    #[arg(long, default_value_t = 1, value_parser = parse_positive)]
    pub k: usize,
    /// Constant in the ranking-recovery sample bound.
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive_real)]
    pub c5: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    /// Sweep spec JSON file.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Rank(a) => commands::rank(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Diagnose(a) => commands::diagnose(&a),
        Command::Theory(a) => commands::theory(&a),
        Command::Sweep(a) => sweep::run(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<UsageError>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
