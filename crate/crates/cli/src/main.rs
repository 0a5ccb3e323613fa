use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

use commands::{CliError, Outcome};

/// Build smooth paths through witness points and certify their properties.
#[derive(Debug, Parser)]
#[command(name = "pathcert", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a verified cover of the unit sphere by spherical caps.
    Cover(CoverArgs),
    /// Build a smooth path from a witness document.
    Build(BuildArgs),
    /// Sample a built path on a grid and write CSV.
    Sample(SampleArgs),
    /// Run verification suites on a built path.
    Check(CheckArgs),
    /// Probe a scalar field for discontinuity at the origin.
    Probe(ProbeArgs),
}

#[derive(Debug, Args)]
pub struct CoverArgs {
    #[arg(long)]
    pub dim: usize,
    /// Cap radius in degrees [default: half the cone's angular radius]
    #[arg(long)]
    pub half_angle_deg: Option<f64>,
    /// Output file (stdout if omitted)
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Witness JSON document
    #[arg(long)]
    pub input: std::path::PathBuf,
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(2..=100_000))]
    pub k_max: u64,
    /// Cover cap radius in degrees
    #[arg(long)]
    pub half_angle_deg: Option<f64>,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Path JSON written by `build`
    #[arg(long)]
    pub path: std::path::PathBuf,
    /// uniform:N[:lo:hi], log:N[:lo:hi] or dense[:per_decade[:per_window]]
    #[arg(long, default_value = "dense")]
    pub grid: String,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Path JSON; required unless only kernel/lemma1 suites run
    #[arg(long)]
    pub path: Option<std::path::PathBuf>,
    /// Comma-separated suites: kernel, interpolation, envelope, coincidence,
    /// product, smoothness, lemma1 [default: all]
    #[arg(long, value_delimiter = ',')]
    pub suite: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random points for the smoothness suite
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(10..=1_000_000))]
    pub trials: u64,
    /// Grid for the product scan
    #[arg(long, default_value = "dense")]
    pub grid: String,
    /// Number of random paths for the lemma1 suite (seeds 0..N)
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..=1_000_000))]
    pub lemma1_paths: u64,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..=100_000))]
    pub envelope_k_max: u64,
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..=1_000_000))]
    pub samples_per_shell: u64,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// builtin:<name> or an expression over x1..xn
    #[arg(long)]
    pub field: String,
    /// Witness JSON document (explicit pairs or a generator)
    #[arg(long)]
    pub input: std::path::PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(10..=100_000))]
    pub k_max: u64,
    /// Fewest generated points with |f| >= epsilon
    #[arg(long, default_value_t = 2)]
    pub min_count: usize,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    /// Also write the tail profile as CSV
    #[arg(long)]
    pub tail_csv: Option<std::path::PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = commands::configure_threads() {
        return report(e);
    }
    let result = match cli.command {
        Command::Cover(a) => commands::cover(&a),
        Command::Build(a) => commands::build(&a),
        Command::Sample(a) => commands::sample(&a),
        Command::Check(a) => commands::check(&a),
        Command::Probe(a) => commands::probe(&a),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Negative) => ExitCode::from(1),
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}
