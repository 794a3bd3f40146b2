use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use treetweak::{CostFunction, Criterion};

mod commands;

#[derive(Parser)]
#[command(
    name = "treetweak",
    version,
    about = "Train random forests and find minimal feature tweaks that flip their predictions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a forest on a labeled CSV and report holdout metrics.
    Train(TrainArgs),
    /// Compute recommendations for every model-negative instance.
    Tweak(TweakArgs),
    /// Coverage and cost over an epsilon grid and several cost functions.
    Sweep(SweepArgs),
    /// Feature frequency tables, rank correlations and helpfulness.
    Report(ReportArgs),
    /// Write a seeded two-Gaussian CSV.
    Generate(GenerateArgs),
}

#[derive(Args)]
pub struct TrainArgs {
    /// Labeled CSV; the last column must be `label` (-1 or +1).
    #[arg(long)]
    pub data: PathBuf,
    /// Where to write the model JSON.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = Criterion::Gini)]
    pub criterion: Criterion,
    /// Number of trees; 1 trains a single tree without bootstrap.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub trees: u64,
    /// Defaults to the number of features.
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Features sampled per split, default ceil(sqrt(n)).
    #[arg(long)]
    pub features_per_split: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of rows held out for evaluation.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Comma-separated columns that cannot be changed.
    #[arg(long, value_delimiter = ',')]
    pub fixed: Vec<String>,
    /// 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV with the model's raw feature columns and an optional label.
    #[arg(long)]
    pub data: PathBuf,
    /// Maximum number of paths examined per instance.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Leave features that already satisfy a path's test where they are.
    #[arg(long)]
    pub allow_satisfied_skip: bool,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Args)]
pub struct TweakArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = CostFunction::Euclidean)]
    pub delta: CostFunction,
    #[arg(long, default_value_t = 3)]
    pub top_k: usize,
    /// Recommendations JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1,0.5,1")]
    pub epsilon_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "tweaked_feature_rate,euclidean,cosine,jaccard,pearson")]
    pub delta: Vec<CostFunction>,
    /// Summary CSV, one row per (epsilon, cost).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-instance outcome log.
    #[arg(long)]
    pub outcomes: Option<PathBuf>,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Output of `tweak`.
    #[arg(long)]
    pub recommendations: PathBuf,
    /// CSV with columns feature_name,verdict.
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// `.json` writes the full report, anything else a long-format CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 2000)]
    pub rows: usize,
    #[arg(long, default_value_t = 10)]
    pub features: usize,
    /// Distance between class means in every coordinate.
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TREETWEAK_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(&a),
        Command::Tweak(a) => commands::tweak(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Report(a) => commands::report(&a),
        Command::Generate(a) => commands::generate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
