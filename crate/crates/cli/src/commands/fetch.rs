//! `pubcultures fetch`: walk the ranking and populate the tally cache.

use std::time::Duration;

use clap::Args;
use pubcultures::ingest::{load_ranking, FetchConfig, IngestError, OpenAlexClient};

use crate::{CliError, GlobalArgs};

#[derive(Args, Debug)]
pub struct FetchArgs {
    /// Ranking CSV (rank,ror_id,name,country)
    #[arg(long)]
    pub ranking: std::path::PathBuf,
    /// Years to fetch: a single year, a comma list, or an inclusive A:B range
    #[arg(long)]
    pub years: String,
    /// OpenAlex endpoint
    #[arg(long, default_value = "https://api.openalex.org")]
    pub base_url: String,
    /// Contact email for the polite pool
    #[arg(long)]
    pub contact_email: Option<String>,
    /// Retries for HTTP 429/5xx responses
    #[arg(long, default_value_t = 3)]
    pub max_retries: u32,
}

pub fn parse_years(spec: &str) -> Result<Vec<i32>, CliError> {
    let usage = || CliError::Usage(format!("cannot parse years {spec:?}; use 2022, 2019:2023, or 2019,2021"));
    let spec = spec.trim();
    if let Some((a, b)) = spec.split_once(':') {
        let start: i32 = a.trim().parse().map_err(|_| usage())?;
        let end: i32 = b.trim().parse().map_err(|_| usage())?;
        if start > end {
            return Err(usage());
        }
        return Ok((start..=end).collect());
    }
    spec.split(',')
        .map(|part| part.trim().parse().map_err(|_| usage()))
        .collect()
}

pub fn run(global: &GlobalArgs, args: &FetchArgs) -> Result<(), CliError> {
    let years = parse_years(&args.years)?;
    let institutions = load_ranking(&args.ranking)?;
    if institutions.is_empty() {
        return Err(CliError::Data(format!(
            "ranking {} lists no institutions",
            args.ranking.display()
        )));
    }
    let config = FetchConfig {
        base_url: args.base_url.clone(),
        inter_request_delay: Duration::from_secs_f64(global.delay_seconds.max(0.0)),
        max_retries: args.max_retries,
        contact_email: args.contact_email.clone(),
        cache_dir: global.cache_dir(),
    };
    let client = OpenAlexClient::new(config)?;

    let mut failures: Vec<(String, i32, IngestError)> = Vec::new();
    let total_jobs = institutions.len() * years.len();
    let mut done = 0usize;
    for institution in &institutions {
        for &year in &years {
            done += 1;
            match client.fetch_tally(institution, year) {
                Ok(tally) => println!(
                    "[{done}/{total_jobs}] {} {}: {} articles",
                    institution.ror_id, year, tally.total
                ),
                Err(e) => {
                    println!("[{done}/{total_jobs}] {} {}: FAILED ({e})", institution.ror_id, year);
                    failures.push((institution.ror_id.clone(), year, e));
                }
            }
        }
    }
    println!(
        "fetched {} of {total_jobs} tallies into {}",
        total_jobs - failures.len(),
        client.cache().dir().display()
    );
    if failures.is_empty() {
        return Ok(());
    }
    for (ror, year, error) in &failures {
        eprintln!("failed: {ror} {year}: {error}");
    }
    let network = failures
        .iter()
        .any(|(_, _, e)| matches!(e, IngestError::NetworkError { .. }));
    let message = format!("{} of {total_jobs} fetches failed", failures.len());
    if network {
        Err(CliError::Network(message))
    } else {
        Err(CliError::Data(message))
    }
}
