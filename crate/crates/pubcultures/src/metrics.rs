//! The publication ratio ρ and its aggregation.
//!
//! For an entity (university or country) and year, with `N_MDPI` articles
//! published with MDPI and `N_BigFive` with the five legacy publishers,
//!
//! ```text
//! ρ = N_MDPI / (N_BigFive + N_MDPI)
//! ```
//!
//! ρ is undefined when both counts are zero; such entity-years are excluded
//! from analysis rather than treated as ρ=0. Country-level ρ sums the counts
//! of the country's ranked universities by default (weighting large producers
//! accordingly); averaging university ratios instead is available through
//! [`CountryAggregation::MeanRho`].

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{PublicationTally, Publisher};

#[derive(Debug, Error)]
pub enum MetricsError {
    /// Both counts are zero, so ρ has no value.
    #[error("rho undefined for {entity} ({year}): no MDPI or Big Five articles")]
    UndefinedRatio { entity: String, year: i32 },
    /// A partition side came out empty, which signals a degenerate threshold.
    #[error("threshold {threshold} produces an empty {side} group")]
    EmptyGroup { threshold: f64, side: &'static str },
    #[error("threshold must lie strictly inside (0,1), got {0}")]
    InvalidThreshold(f64),
    /// Partitioning expects country-level records for a single year.
    #[error("records must all be country-level for one year")]
    MixedRecords,
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Aggregation level of a ρ record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    University,
    Country,
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Level::University => "university",
            Level::Country => "country",
        })
    }
}

/// ρ for one entity and year, together with the counts behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoRecord {
    /// ROR ID (university level) or ISO country code (country level).
    pub entity_id: String,
    pub level: Level,
    pub year: i32,
    pub n_mdpi: u64,
    pub n_big_five: u64,
    pub rho: f64,
}

impl RhoRecord {
    /// Build a record from counts, computing ρ; errors when both are zero.
    pub fn from_counts(
        entity_id: impl Into<String>,
        level: Level,
        year: i32,
        n_mdpi: u64,
        n_big_five: u64,
    ) -> Result<Self, MetricsError> {
        let entity_id = entity_id.into();
        let denominator = n_mdpi + n_big_five;
        if denominator == 0 {
            return Err(MetricsError::UndefinedRatio {
                entity: entity_id,
                year,
            });
        }
        Ok(Self {
            entity_id,
            level,
            year,
            n_mdpi,
            n_big_five,
            rho: n_mdpi as f64 / denominator as f64,
        })
    }
}

/// A two-group split of countries by a ρ threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPartition {
    /// Countries with ρ above the threshold.
    pub high: BTreeSet<String>,
    /// Countries with ρ below the threshold (ties land here).
    pub low: BTreeSet<String>,
    pub threshold: f64,
    pub year: i32,
}

/// ρ for one institution-year tally.
pub fn compute_rho(tally: &PublicationTally) -> Result<RhoRecord, MetricsError> {
    RhoRecord::from_counts(
        tally.institution.ror_id.clone(),
        Level::University,
        tally.year,
        tally.count(Publisher::Mdpi),
        tally.big_five_total(),
    )
}

/// How country-level ρ is assembled from university tallies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountryAggregation {
    /// Sum MDPI and Big Five counts over the country's universities, then
    /// form the ratio of the sums.
    #[default]
    SumCounts,
    /// Average the defined university ratios, unweighted. The count fields
    /// still carry the sums; the ratio identity holds only for
    /// [`CountryAggregation::SumCounts`].
    MeanRho,
}

/// Country-level ρ records for `year` using the default count-sum
/// aggregation. See [`aggregate_country_with`].
pub fn aggregate_country(tallies: &[PublicationTally], year: i32) -> Vec<RhoRecord> {
    aggregate_country_with(tallies, year, CountryAggregation::SumCounts)
}

/// Country-level ρ records for `year`.
///
/// Tallies from other years are ignored. Countries whose combined counts are
/// zero have no defined ρ; they are skipped with a logged warning. Records
/// come back sorted by country code.
pub fn aggregate_country_with(
    tallies: &[PublicationTally],
    year: i32,
    mode: CountryAggregation,
) -> Vec<RhoRecord> {
    #[derive(Default)]
    struct Acc {
        n_mdpi: u64,
        n_big_five: u64,
        rhos: Vec<f64>,
    }
    let mut by_country: BTreeMap<String, Acc> = BTreeMap::new();
    for tally in tallies.iter().filter(|t| t.year == year) {
        let acc = by_country
            .entry(tally.institution.country.clone())
            .or_default();
        let n_mdpi = tally.count(Publisher::Mdpi);
        let n_big_five = tally.big_five_total();
        acc.n_mdpi += n_mdpi;
        acc.n_big_five += n_big_five;
        if n_mdpi + n_big_five > 0 {
            acc.rhos.push(n_mdpi as f64 / (n_mdpi + n_big_five) as f64);
        }
    }
    by_country
        .into_iter()
        .filter_map(|(country, acc)| {
            let record = RhoRecord::from_counts(
                country.clone(),
                Level::Country,
                year,
                acc.n_mdpi,
                acc.n_big_five,
            );
            match (record, mode) {
                (Ok(record), CountryAggregation::SumCounts) => Some(record),
                (Ok(mut record), CountryAggregation::MeanRho) => {
                    record.rho = acc.rhos.iter().sum::<f64>() / acc.rhos.len() as f64;
                    Some(record)
                }
                (Err(_), _) => {
                    log::warn!("{country} ({year}): no MDPI or Big Five articles, skipped");
                    None
                }
            }
        })
        .collect()
}

/// Split country records into high/low groups around a threshold.
///
/// Records must be country-level and share one year, and the threshold must
/// lie strictly inside (0,1). A record exactly at the threshold goes to the
/// low group.
pub fn partition_countries(
    records: &[RhoRecord],
    threshold: f64,
) -> Result<GroupPartition, MetricsError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(MetricsError::InvalidThreshold(threshold));
    }
    let year = records.first().ok_or(MetricsError::MixedRecords)?.year;
    if records
        .iter()
        .any(|r| r.level != Level::Country || r.year != year)
    {
        return Err(MetricsError::MixedRecords);
    }
    let mut high = BTreeSet::new();
    let mut low = BTreeSet::new();
    for record in records {
        if record.rho > threshold {
            high.insert(record.entity_id.clone());
        } else {
            low.insert(record.entity_id.clone());
        }
    }
    for (set, side) in [(&high, "high"), (&low, "low")] {
        if set.is_empty() {
            return Err(MetricsError::EmptyGroup { threshold, side });
        }
    }
    Ok(GroupPartition {
        high,
        low,
        threshold,
        year,
    })
}

/// Write ρ records as CSV with header
/// `entity_id,level,year,n_mdpi,n_big_five,rho`.
pub fn write_rho_csv<W: Write>(records: &[RhoRecord], writer: W) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(writer);
    for record in records {
        w.serialize(record)?;
    }
    w.flush()?;
    Ok(())
}

/// Read ρ records from CSV produced by [`write_rho_csv`].
pub fn read_rho_csv<R: Read>(reader: R) -> Result<Vec<RhoRecord>, MetricsError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut records = Vec::new();
    for row in r.deserialize() {
        records.push(row?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::ingest::InstitutionRef;

    fn tally(ror: &str, country: &str, year: i32, mdpi: u64, big_five: u64) -> PublicationTally {
        let per_publisher = big_five / 5;
        let remainder = big_five - per_publisher * 4;
        PublicationTally {
            institution: InstitutionRef::new(ror, "U", country, 1).unwrap(),
            year,
            counts_by_publisher: BTreeMap::from([
                (Publisher::Mdpi, mdpi),
                (Publisher::Elsevier, remainder),
                (Publisher::SpringerNature, per_publisher),
                (Publisher::Wiley, per_publisher),
                (Publisher::TaylorFrancis, per_publisher),
                (Publisher::Sage, per_publisher),
            ]),
            total: mdpi + big_five,
            retracted: 0,
            open_access: 0,
            gold_open_access: 0,
        }
    }

    #[test]
    fn rho_simple_cases() {
        assert_eq!(
            compute_rho(&tally("0abcdefgh", "SI", 2022, 0, 200)).unwrap().rho,
            0.0
        );
        assert_eq!(
            compute_rho(&tally("0abcdefgh", "SI", 2022, 50, 150)).unwrap().rho,
            0.25
        );
        assert_eq!(
            compute_rho(&tally("0abcdefgh", "SI", 2022, 7, 0)).unwrap().rho,
            1.0
        );
        assert!(matches!(
            compute_rho(&tally("0abcdefgh", "SI", 2022, 0, 0)),
            Err(MetricsError::UndefinedRatio { .. })
        ));
    }

    #[test]
    fn country_rho_sums_counts_not_ratios() {
        let tallies = vec![
            tally("0aaaaaaaa", "SI", 2022, 10, 90),
            tally("0bbbbbbbb", "SI", 2022, 30, 70),
        ];
        let records = aggregate_country(&tallies, 2022);
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].entity_id, "SI");
        assert_eq!(records[0].n_mdpi, 40);
        assert_eq!(records[0].n_big_five, 160);
        assert_eq!(records[0].rho, 0.2);
    }

    #[test]
    fn single_university_country_matches_university_rho() {
        let tallies = vec![tally("0aaaaaaaa", "LU", 2022, 12, 36)];
        let records = aggregate_country(&tallies, 2022);
        assert_eq!(records[0].rho, 0.25);
    }

    #[test]
    fn countries_aggregate_independently() {
        let tallies = vec![
            tally("0aaaaaaaa", "SI", 2022, 10, 90),
            tally("0bbbbbbbb", "AT", 2022, 5, 95),
            tally("0cccccccc", "AT", 2021, 500, 0),
        ];
        let records = aggregate_country(&tallies, 2022);
        assert_eq!(records.len(), 2);
        let at = records.iter().find(|r| r.entity_id == "AT").unwrap();
        assert_eq!(at.rho, 0.05);
        let si = records.iter().find(|r| r.entity_id == "SI").unwrap();
        assert_eq!(si.rho, 0.1);
    }

    #[test]
    fn mean_rho_mode_averages_ratios() {
        let tallies = vec![
            tally("0aaaaaaaa", "SI", 2022, 10, 90),  // 0.1
            tally("0bbbbbbbb", "SI", 2022, 300, 700), // 0.3
        ];
        let records = aggregate_country_with(&tallies, 2022, CountryAggregation::MeanRho);
        assert!((records[0].rho - 0.2).abs() < 1e-12);
        // count-sum weights the bigger producer instead
        let sum_records = aggregate_country(&tallies, 2022);
        assert!((sum_records[0].rho - 310.0 / 1100.0).abs() < 1e-12);
    }

    #[test]
    fn zero_count_country_is_skipped() {
        let tallies = vec![
            tally("0aaaaaaaa", "SI", 2022, 10, 90),
            tally("0bbbbbbbb", "AT", 2022, 0, 0),
        ];
        let records = aggregate_country(&tallies, 2022);
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].entity_id, "SI");
    }

    fn country_record(code: &str, rho_millis: u64) -> RhoRecord {
        RhoRecord::from_counts(code, Level::Country, 2022, rho_millis, 1000 - rho_millis)
            .unwrap()
    }

    #[test]
    fn partition_splits_around_threshold() {
        let records = vec![
            country_record("A", 100),
            country_record("B", 200),
            country_record("C", 500),
            country_record("D", 600),
        ];
        let partition = partition_countries(&records, 0.35).unwrap();
        assert_eq!(partition.low, BTreeSet::from(["A".into(), "B".into()]));
        assert_eq!(partition.high, BTreeSet::from(["C".into(), "D".into()]));
        assert_eq!(partition.high.len() + partition.low.len(), records.len());
    }

    #[test]
    fn partition_tie_goes_low() {
        let records = vec![country_record("A", 350), country_record("B", 600)];
        let partition = partition_countries(&records, 0.35).unwrap();
        assert!(partition.low.contains("A"));
    }

    #[test]
    fn partition_empty_side_is_an_error() {
        let records = vec![country_record("A", 100), country_record("B", 200)];
        assert!(matches!(
            partition_countries(&records, 0.9),
            Err(MetricsError::EmptyGroup { side: "high", .. })
        ));
    }

    #[test]
    fn partition_rejects_university_records() {
        let mut record = country_record("A", 100);
        record.level = Level::University;
        assert!(matches!(
            partition_countries(&[record, country_record("B", 600)], 0.35),
            Err(MetricsError::MixedRecords)
        ));
    }

    #[test]
    fn rho_csv_round_trip() {
        let records = vec![country_record("SI", 300), country_record("AT", 80)];
        let mut buf = Vec::new();
        write_rho_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("entity_id,level,year,n_mdpi,n_big_five,rho\n"));
        let parsed = read_rho_csv(buf.as_slice()).unwrap();
        assert_eq!(parsed, records);
    }
}
