use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use interleave_lab::commands::{
    analyze, check, selftest, simulate, AnalyzeOptions, CheckOptions, ResearchQuestion,
    SelftestOptions, SimulateOptions,
};
use interleave_lab::CliError;

/// Desk-scale laboratory comparing the statistical efficiency of
/// interleaved comparisons against A/B testing.
#[derive(Parser)]
#[command(name = "interleave-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the closed-form error probabilities over a relevance grid.
    Analyze(AnalyzeArgs),
    /// Run randomized checks of the efficiency results.
    Check(CheckArgs),
    /// Run the click-simulation experiments on a dataset.
    Simulate(SimulateArgs),
    /// Run the built-in property battery.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Comma-separated leave propensities (default: 1,100).
    #[arg(long)]
    alpha: Option<String>,
    /// Relevance grid step; must divide [0, 1] evenly (default: 0.02).
    #[arg(long)]
    grid_step: Option<f64>,
    /// Impression count behind each error probability (default: 10000).
    #[arg(long)]
    n: Option<u64>,
    /// Output CSV path (default: sweep.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file with defaults for any of the above.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Randomized draws per case (default: 10000).
    #[arg(long)]
    draws: Option<u64>,
    /// Random seed (default: config, then INTERLEAVE_LAB_SEED, then 42).
    #[arg(long)]
    seed: Option<u64>,
    /// Optional report file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(subcommand)]
    question: SimulateCommand,
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// Error rate over the impression budget, queries sampled per
    /// impression.
    Rq1(SimulateCommon),
    /// Error rate after the full budget on single queries, binned by
    /// nDCG difference.
    Rq2(SimulateCommon),
}

#[derive(Args)]
struct SimulateCommon {
    /// Dataset file in the (optionally gzipped) qid/feature line format.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Use the bundled synthetic dataset instead of a file.
    #[arg(long)]
    synthetic: bool,
    /// perfect, navigational, or file (tables from the config).
    #[arg(long)]
    click_model: Option<String>,
    /// Impressions per evaluation (default: 1000).
    #[arg(long)]
    impressions: Option<u64>,
    /// Independent repeats (default: 10).
    #[arg(long)]
    repeats: Option<u32>,
    /// Display length (default: 5).
    #[arg(long)]
    cutoff: Option<usize>,
    /// Random seed (default: config, then INTERLEAVE_LAB_SEED, then 42).
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (default: rq1.csv / rq2.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: machine parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated feature indices to pair (default: all).
    #[arg(long)]
    features: Option<String>,
    /// Queries sampled with replacement per repeat (rq2; default: 1000).
    #[arg(long)]
    rq2_samples: Option<usize>,
    /// Comma-separated nDCG-difference bin edges (rq2).
    #[arg(long)]
    rq2_bins: Option<String>,
    /// Record every impression instead of log-spaced checkpoints (rq1).
    #[arg(long)]
    log_every_impression: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Random seed (default: INTERLEAVE_LAB_SEED, then 42).
    #[arg(long)]
    seed: Option<u64>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(args) => analyze(&AnalyzeOptions {
            alpha: args.alpha,
            grid_step: args.grid_step,
            n: args.n,
            out: args.out,
            config: args.config,
        }),
        Command::Check(args) => check(&CheckOptions {
            draws: args.draws,
            seed: args.seed,
            out: args.out,
            config: args.config,
        }),
        Command::Simulate(args) => {
            let (question, common) = match args.question {
                SimulateCommand::Rq1(common) => (ResearchQuestion::Rq1, common),
                SimulateCommand::Rq2(common) => (ResearchQuestion::Rq2, common),
            };
            simulate(&SimulateOptions {
                question,
                dataset: common.dataset,
                synthetic: common.synthetic,
                click_model: common.click_model,
                impressions: common.impressions,
                repeats: common.repeats,
                cutoff: common.cutoff,
                seed: common.seed,
                out: common.out,
                workers: common.workers,
                features: common.features,
                rq2_samples: common.rq2_samples,
                rq2_bins: common.rq2_bins,
                log_every_impression: common.log_every_impression,
                config: common.config,
            })
        }
        Command::Selftest(args) => selftest(&SelftestOptions { seed: args.seed }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help and version requests are successes; anything else is a
            // flag validation failure
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
