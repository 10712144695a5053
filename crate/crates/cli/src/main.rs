//! `seqlab` command-line driver.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid arguments or specs,
//! 3 numeric budget exceeded (enclosure too wide).

mod commands;
mod spec;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "seqlab", version, about = "Sequential prediction laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tables and constants of the up-or-reset chain.
    #[command(subcommand)]
    Chain(ChainCommand),
    /// The stationary measure induced by a target sequence.
    #[command(subcommand)]
    Mux(MuxCommand),
    /// Score a predictor on a target sequence.
    Loss(LossArgs),
    /// Adversarial sequence against a predictor, scored against the stationary measure.
    Theorem1(Theorem1Args),
    /// Word frequencies of a sampled trajectory versus certified marginals.
    Ergodicity(ErgodicityArgs),
}

#[derive(Debug, Subcommand)]
enum ChainCommand {
    Info(ChainInfoArgs),
}

#[derive(Debug, Args)]
pub struct ChainInfoArgs {
    /// Rows in the p_j, f11 and pi tables.
    #[arg(long, default_value_t = 10)]
    pub max_n: u64,
    /// Truncation for constant estimation.
    #[arg(long, default_value_t = 1_000_000)]
    pub trunc: usize,
}

#[derive(Debug, Subcommand)]
enum MuxCommand {
    Marginal(MarginalArgs),
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct MarginalArgs {
    #[arg(long)]
    pub target: String,
    /// Bitstring y_1..y_n.
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value_t = 10_000)]
    pub trunc: usize,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub target: String,
    #[arg(short = 'n', long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub trunc: usize,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    #[arg(long)]
    pub rho: String,
    #[arg(long)]
    pub target: String,
    #[arg(short = 'n', long)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trunc: usize,
    /// Also estimate the expected KL under the target's stationary measure
    /// from this many sampled trajectories.
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct Theorem1Args {
    #[arg(long)]
    pub rho: String,
    #[arg(short = 'n', long)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trunc: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: std::path::PathBuf,
    /// Fail with exit code 3 if any conditional enclosure of the stationary
    /// measure is wider than this.
    #[arg(long)]
    pub max_width: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ErgodicityArgs {
    #[arg(long)]
    pub target: String,
    #[arg(short = 'n', long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub trunc: usize,
    /// Report all words up to this length.
    #[arg(long, default_value_t = 3)]
    pub word_len: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Chain(ChainCommand::Info(a)) => commands::chain_info(&a),
        Command::Mux(MuxCommand::Marginal(a)) => commands::mux_marginal(&a),
        Command::Mux(MuxCommand::Sample(a)) => commands::mux_sample(&a),
        Command::Loss(a) => commands::loss(&a),
        Command::Theorem1(a) => commands::theorem1(&a),
        Command::Ergodicity(a) => commands::ergodicity(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
