//! `pubcultures` — fetch publication tallies, compute the MDPI-vs-Big-Five
//! ratio, fit mixtures, test group separations, correlate with country
//! indicators, and simulate the replicator model.
//!
//! Exit codes are a stable scripting contract: 0 success, 1 usage error,
//! 2 data error, 3 network error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Network(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Network(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Network(m) => m,
        }
    }
}

impl From<pubcultures::IngestError> for CliError {
    fn from(e: pubcultures::IngestError) -> Self {
        match e {
            pubcultures::IngestError::NetworkError { .. } => CliError::Network(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

macro_rules! data_error_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}
data_error_from!(
    pubcultures::MetricsError,
    pubcultures::MixtureError,
    pubcultures::StatsError,
    pubcultures::ReplicatorError,
    std::io::Error,
    serde_json::Error
);

#[derive(Parser, Debug)]
#[command(name = "pubcultures", version, about)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalArgs {
    /// Cache directory (env PUBCULTURES_CACHE_DIR, default ./openalex-cache)
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Seed for every randomized stage
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format for commands that support both
    #[arg(long, global = true, value_enum, default_value_t = commands::Format::Csv)]
    format: commands::Format,
    /// Spacing between OpenAlex requests, in seconds
    #[arg(long, global = true, default_value_t = 30.0)]
    delay_seconds: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Populate the cache with tallies for ranked institutions
    Fetch(commands::fetch::FetchArgs),
    /// Compute ρ, fit the mixture, partition, and test the split
    Analyze(commands::analyze::AnalyzeArgs),
    /// Correlate country ρ with innovation and corruption indicators
    Correlate(commands::correlate::CorrelateArgs),
    /// Average university ρ over rank bins and fit a trend line
    RankBins(commands::rank_bins::RankBinsArgs),
    /// Replicator-dynamics model tools
    #[command(subcommand)]
    Replicator(commands::replicator::ReplicatorCommand),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let kind = e.kind();
            let _ = e.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };

    let result = match &cli.command {
        Command::Fetch(args) => commands::fetch::run(&cli.global, args),
        Command::Analyze(args) => commands::analyze::run(&cli.global, args),
        Command::Correlate(args) => commands::correlate::run(&cli.global, args),
        Command::RankBins(args) => commands::rank_bins::run(&cli.global, args),
        Command::Replicator(command) => commands::replicator::run(&cli.global, command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

impl GlobalArgs {
    /// Resolved cache directory: flag, then env var, then the default.
    fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| {
            std::env::var_os(pubcultures::ingest::CACHE_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("openalex-cache"))
        })
    }
}
