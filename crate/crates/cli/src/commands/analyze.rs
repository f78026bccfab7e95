//! `pubcultures analyze`: cache → ρ records → mixture fit → threshold
//! partition → Mann-Whitney and permutation robustness.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use pubcultures::ingest::{load_ranking, TallyCache};
use pubcultures::metrics::{
    aggregate_country, compute_rho, partition_countries, write_rho_csv, Level, RhoRecord,
};
use pubcultures::mixture::{fit_gmm2, mixture_minimum, MixtureError, MixtureFit};
use pubcultures::stats::{
    mann_whitney_u, permutation_robustness, write_permutation_csv, PermutationSummary,
};
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::{CliError, GlobalArgs};

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Aggregation level: university or country
    #[arg(long, value_enum)]
    pub level: LevelArg,
    #[arg(long)]
    pub year: i32,
    /// Ranking CSV naming the institutions to analyze
    #[arg(long)]
    pub ranking: PathBuf,
    /// Directory for rho.csv, mixture.json, partition.json, mw_test.json,
    /// permutation.csv, and manifest.json
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Permutation trials per k
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Largest number of switched countries to test
    #[arg(long, default_value_t = 2)]
    pub max_k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum LevelArg {
    University,
    Country,
}

/// The mixture fit plus the bimodality verdict and, when bimodal, the
/// inter-peak threshold.
#[derive(Debug, Serialize)]
struct MixtureDocument<'a> {
    fit: &'a MixtureFit,
    bimodal: bool,
    threshold: Option<f64>,
}

pub fn run(global: &GlobalArgs, args: &AnalyzeArgs) -> Result<(), CliError> {
    let institutions = load_ranking(&args.ranking)?;
    let cache = TallyCache::new(global.cache_dir());

    let mut tallies = Vec::new();
    let mut missing = 0usize;
    for institution in &institutions {
        match cache.load(&institution.ror_id, args.year)? {
            Some(mut tally) => {
                // the ranking in hand wins over whatever identity was cached
                tally.institution = institution.clone();
                tallies.push(tally);
            }
            None => {
                missing += 1;
                log::warn!("no cache entry for {} {}", institution.ror_id, args.year);
            }
        }
    }
    if missing > 0 {
        eprintln!("warning: {missing} institutions missing from the cache; run fetch first");
    }

    let records: Vec<RhoRecord> = match args.level {
        LevelArg::University => tallies
            .iter()
            .filter_map(|tally| match compute_rho(tally) {
                Ok(record) => Some(record),
                Err(e) => {
                    log::warn!("skipping: {e}");
                    None
                }
            })
            .collect(),
        LevelArg::Country => aggregate_country(&tallies, args.year),
    };
    if records.len() < 4 {
        return Err(CliError::Data(format!(
            "insufficient data: {} defined rho values at the {} level for {}, need at least 4",
            records.len(),
            level_name(args.level),
            args.year
        )));
    }

    fs::create_dir_all(&args.out_dir)?;
    let mut rho_file = Vec::new();
    write_rho_csv(&records, &mut rho_file)?;
    fs::write(args.out_dir.join("rho.csv"), rho_file)?;

    let rhos: Vec<f64> = records.iter().map(|r| r.rho).collect();
    let fit = fit_gmm2(&rhos, 1e-8, 500, global.seed)?;
    let threshold = match mixture_minimum(&fit) {
        Ok(x) => Some(x),
        Err(MixtureError::NoInteriorMinimum { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let mixture_doc = MixtureDocument {
        fit: &fit,
        bimodal: threshold.is_some(),
        threshold,
    };
    write_json(&args.out_dir.join("mixture.json"), &mixture_doc)?;
    println!(
        "{} level {}: n={} weight={:.3} mu1={:.4} mu2={:.4} gap={:.4}",
        level_name(args.level),
        args.year,
        records.len(),
        fit.weight,
        fit.mu1,
        fit.mu2,
        fit.mu2 - fit.mu1
    );

    match (args.level, threshold) {
        (LevelArg::Country, Some(threshold)) => {
            analyze_partition(global, args, &records, threshold)?;
        }
        (LevelArg::Country, None) => {
            println!(
                "warning: rho distribution for {} is unimodal; no partition emitted",
                args.year
            );
        }
        (LevelArg::University, _) => {
            // group partitioning is defined over countries only
        }
    }

    let mut parameters = BTreeMap::new();
    parameters.insert("level".into(), level_name(args.level).to_string());
    parameters.insert("year".into(), args.year.to_string());
    parameters.insert("ranking".into(), args.ranking.display().to_string());
    parameters.insert("trials".into(), args.trials.to_string());
    parameters.insert("max_k".into(), args.max_k.to_string());
    parameters.insert("cache_dir".into(), global.cache_dir().display().to_string());
    RunManifest::new("analyze", parameters, global.seed, cache.digest()?)
        .write(&args.out_dir.join("manifest.json"))?;
    Ok(())
}

fn analyze_partition(
    global: &GlobalArgs,
    args: &AnalyzeArgs,
    records: &[RhoRecord],
    threshold: f64,
) -> Result<(), CliError> {
    let partition = match partition_countries(records, threshold) {
        Ok(partition) => partition,
        Err(e) => {
            println!("warning: threshold {threshold:.4} yields no usable partition ({e})");
            return Ok(());
        }
    };
    write_json(&args.out_dir.join("partition.json"), &partition)?;

    let rho_of = |code: &String| {
        records
            .iter()
            .find(|r| &r.entity_id == code)
            .map(|r| r.rho)
            .expect("partition members come from records")
    };
    let high: Vec<f64> = partition.high.iter().map(rho_of).collect();
    let low: Vec<f64> = partition.low.iter().map(rho_of).collect();
    let mw = mann_whitney_u(&high, &low)?;
    write_json(&args.out_dir.join("mw_test.json"), &mw)?;
    println!(
        "partition at {:.4}: {} high / {} low, U={} p={:.4e}",
        threshold,
        partition.high.len(),
        partition.low.len(),
        mw.u_statistic,
        mw.p_value
    );

    let mut summaries: Vec<PermutationSummary> = Vec::new();
    for k in 0..=args.max_k {
        if k > 0 && k >= partition.high.len().min(partition.low.len()) {
            log::warn!("skipping k={k}: it could empty a group");
            break;
        }
        let summary = permutation_robustness(records, &partition, k, args.trials, global.seed)?;
        println!(
            "  k={} mean_p={:.4} std_p={:.4}",
            summary.k_switched, summary.mean_p, summary.std_p
        );
        summaries.push(summary);
    }
    let mut buf = Vec::new();
    write_permutation_csv(&summaries, &mut buf)?;
    fs::write(args.out_dir.join("permutation.csv"), buf)?;
    Ok(())
}

fn level_name(level: LevelArg) -> Level {
    match level {
        LevelArg::University => Level::University,
        LevelArg::Country => Level::Country,
    }
}

fn write_json<T: Serialize>(path: &std::path::Path, value: &T) -> Result<(), CliError> {
    let mut body = serde_json::to_vec_pretty(value)?;
    body.push(b'\n');
    fs::write(path, body)?;
    Ok(())
}
