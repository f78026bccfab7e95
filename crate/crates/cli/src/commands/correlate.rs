//! `pubcultures correlate`: join country ρ with EIS/CPI indicators and
//! report correlations plus the transitivity bound.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use pubcultures::ingest::load_indicators;
use pubcultures::metrics::{read_rho_csv, Level};
use pubcultures::stats::{normalize_indicator, pearson, CorrelationReport};

use crate::manifest::{files_digest, RunManifest};
use crate::{CliError, GlobalArgs};

#[derive(Args, Debug)]
pub struct CorrelateArgs {
    /// Country-level rho.csv produced by analyze
    #[arg(long)]
    pub rho: PathBuf,
    /// Indicator CSV (country,eis,cpi)
    #[arg(long)]
    pub indicators: PathBuf,
    /// Output report path (JSON)
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(global: &GlobalArgs, args: &CorrelateArgs) -> Result<(), CliError> {
    let rho_file = std::fs::File::open(&args.rho)?;
    let records = read_rho_csv(rho_file)?;
    if records.iter().any(|r| r.level != Level::Country) {
        return Err(CliError::Data(format!(
            "{} must contain country-level records only",
            args.rho.display()
        )));
    }
    let indicators = load_indicators(&args.indicators)?;

    // join on country code; BTreeMap gives a deterministic country order
    let by_country: BTreeMap<&str, f64> = records
        .iter()
        .map(|r| (r.entity_id.as_str(), r.rho))
        .collect();
    let mut rho = Vec::new();
    let mut eis = Vec::new();
    let mut cpi = Vec::new();
    let mut countries = Vec::new();
    for (country, value) in &by_country {
        if let Some(row) = indicators.iter().find(|i| i.country == *country) {
            rho.push(*value);
            eis.push((row.country.clone(), row.eis));
            cpi.push((row.country.clone(), row.cpi as f64));
            countries.push(row.country.clone());
        }
    }
    if rho.len() < 3 {
        return Err(CliError::Data(format!(
            "insufficient overlap: only {} countries appear in both inputs, need at least 3",
            rho.len()
        )));
    }

    let eis_normalized: Vec<f64> = normalize_indicator(&eis)?
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    let cpi_normalized: Vec<f64> = normalize_indicator(&cpi)?
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    let a = pearson(&rho, &eis_normalized)?;
    let b = pearson(&rho, &cpi_normalized)?;
    let eis_cpi = pearson(&eis_normalized, &cpi_normalized)?;
    let report = CorrelationReport::new(a, b, eis_cpi)?;

    let mut body = serde_json::to_vec_pretty(&report)?;
    body.push(b'\n');
    std::fs::write(&args.out, body)?;
    println!(
        "{} countries: Corr(rho,EIS)={:.4} Corr(rho,CPI)={:.4} Corr(EIS,CPI)={:.4} bound={:.4}",
        countries.len(),
        report.a,
        report.b,
        report.eis_cpi,
        report.transitivity_lower_bound
    );

    let mut parameters = BTreeMap::new();
    parameters.insert("rho".into(), args.rho.display().to_string());
    parameters.insert("indicators".into(), args.indicators.display().to_string());
    parameters.insert("countries".into(), countries.join(","));
    let digest = files_digest(&[&args.rho, &args.indicators])?;
    RunManifest::new("correlate", parameters, global.seed, digest)
        .write(&manifest_path(&args.out))?;
    Ok(())
}

pub fn manifest_path(out: &std::path::Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}
