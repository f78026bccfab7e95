//! `pubcultures rank-bins`: average university ρ over rank bins and fit the
//! rank trend line.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use pubcultures::ingest::load_ranking;
use pubcultures::metrics::{read_rho_csv, Level};
use pubcultures::stats::{rank_binned_means, write_rank_bins_csv};

use crate::manifest::{files_digest, RunManifest};
use crate::{CliError, GlobalArgs};

#[derive(Args, Debug)]
pub struct RankBinsArgs {
    /// University-level rho.csv produced by analyze
    #[arg(long)]
    pub rho: PathBuf,
    /// Ranking CSV supplying each institution's rank
    #[arg(long)]
    pub ranking: PathBuf,
    /// Ranks per bin
    #[arg(long, default_value_t = 50)]
    pub bin_width: u32,
    /// Directory for rank_bins.csv, rank_bins.json, and manifest.json
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(global: &GlobalArgs, args: &RankBinsArgs) -> Result<(), CliError> {
    let rho_file = std::fs::File::open(&args.rho)?;
    let records = read_rho_csv(rho_file)?;
    if records.iter().any(|r| r.level != Level::University) {
        return Err(CliError::Data(format!(
            "{} must contain university-level records only",
            args.rho.display()
        )));
    }
    let ranking = load_ranking(&args.ranking)?;
    let rank_of: BTreeMap<&str, u32> = ranking
        .iter()
        .map(|i| (i.ror_id.as_str(), i.rank))
        .collect();

    let mut entries: Vec<(u32, f64)> = Vec::new();
    for record in &records {
        match rank_of.get(record.entity_id.as_str()) {
            Some(&rank) => entries.push((rank, record.rho)),
            None => log::warn!("{} is not in the ranking; skipped", record.entity_id),
        }
    }
    let series = rank_binned_means(&entries, args.bin_width)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let mut csv_buf = Vec::new();
    write_rank_bins_csv(&series, &mut csv_buf)?;
    std::fs::write(args.out_dir.join("rank_bins.csv"), csv_buf)?;
    let mut json_buf = serde_json::to_vec_pretty(&series)?;
    json_buf.push(b'\n');
    std::fs::write(args.out_dir.join("rank_bins.json"), json_buf)?;
    println!(
        "{} bins of width {}: slope={:.3e} intercept={:.4} r2={:.4}",
        series.bins.len(),
        series.bin_width,
        series.linear_fit.slope,
        series.linear_fit.intercept,
        series.linear_fit.r_squared
    );

    let mut parameters = BTreeMap::new();
    parameters.insert("rho".into(), args.rho.display().to_string());
    parameters.insert("ranking".into(), args.ranking.display().to_string());
    parameters.insert("bin_width".into(), args.bin_width.to_string());
    let digest = files_digest(&[&args.rho, &args.ranking])?;
    RunManifest::new("rank-bins", parameters, global.seed, digest)
        .write(&args.out_dir.join("manifest.json"))?;
    Ok(())
}
