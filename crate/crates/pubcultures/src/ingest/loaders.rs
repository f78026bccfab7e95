//! CSV loaders for the ranking table and the country indicator file.

use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::{CountryIndicators, IngestError, InstitutionRef};

#[derive(Debug, Deserialize)]
struct RankingRow {
    rank: u32,
    ror_id: String,
    name: String,
    country: String,
}

#[derive(Debug, Deserialize)]
struct IndicatorRow {
    country: String,
    eis: f64,
    cpi: i64,
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Load a ranking CSV (`rank,ror_id,name,country`), sorted ascending by rank.
///
/// Rejects duplicate ROR IDs; a header-only file yields an empty list.
pub fn load_ranking(path: impl AsRef<Path>) -> Result<Vec<InstitutionRef>, IngestError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| IngestError::CacheIo {
        path: path.to_path_buf(),
        source: e,
    })?;
    load_ranking_impl(file, &path.display().to_string())
}

/// [`load_ranking`] over any reader; `source` names the input in errors.
pub fn load_ranking_from_reader<R: Read>(
    reader: R,
    source: &str,
) -> Result<Vec<InstitutionRef>, IngestError> {
    load_ranking_impl(reader, source)
}

fn load_ranking_impl<R: Read>(reader: R, source: &str) -> Result<Vec<InstitutionRef>, IngestError> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| IngestError::ParseError {
            path: source.to_string(),
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    let mut seen = std::collections::HashSet::new();
    let mut institutions = Vec::new();
    for record in csv_reader.records() {
        let record = record.map_err(|e| IngestError::ParseError {
            path: source.to_string(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = line_of(&record);
        let row: RankingRow = record.deserialize(Some(&headers)).map_err(|e| {
            IngestError::ParseError {
                path: source.to_string(),
                line,
                reason: e.to_string(),
            }
        })?;
        let institution = InstitutionRef::new(&row.ror_id, row.name, &row.country, row.rank)
            .map_err(|e| IngestError::ParseError {
                path: source.to_string(),
                line,
                reason: e.to_string(),
            })?;
        if !seen.insert(institution.ror_id.clone()) {
            return Err(IngestError::DuplicateInstitution {
                ror: institution.ror_id,
            });
        }
        institutions.push(institution);
    }
    institutions.sort_by_key(|i| i.rank);
    Ok(institutions)
}

/// Load a country indicator CSV (`country,eis,cpi`).
///
/// Duplicated countries resolve last-wins with a logged warning. Unknown
/// countries are permitted; downstream joins filter them.
pub fn load_indicators(path: impl AsRef<Path>) -> Result<Vec<CountryIndicators>, IngestError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| IngestError::CacheIo {
        path: path.to_path_buf(),
        source: e,
    })?;
    load_indicators_impl(file, &path.display().to_string())
}

/// [`load_indicators`] over any reader; `source` names the input in errors.
pub fn load_indicators_from_reader<R: Read>(
    reader: R,
    source: &str,
) -> Result<Vec<CountryIndicators>, IngestError> {
    load_indicators_impl(reader, source)
}

fn load_indicators_impl<R: Read>(
    reader: R,
    source: &str,
) -> Result<Vec<CountryIndicators>, IngestError> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| IngestError::ParseError {
            path: source.to_string(),
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    let mut out: Vec<CountryIndicators> = Vec::new();
    for record in csv_reader.records() {
        let record = record.map_err(|e| IngestError::ParseError {
            path: source.to_string(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = line_of(&record);
        let row: IndicatorRow = record.deserialize(Some(&headers)).map_err(|e| {
            IngestError::ParseError {
                path: source.to_string(),
                line,
                reason: e.to_string(),
            }
        })?;
        if !(0..=100).contains(&row.cpi) {
            return Err(IngestError::RangeError {
                path: source.to_string(),
                line,
                reason: format!("cpi must lie in [0,100], got {}", row.cpi),
            });
        }
        if !(row.eis.is_finite() && row.eis >= 0.0) {
            return Err(IngestError::RangeError {
                path: source.to_string(),
                line,
                reason: format!("eis must be a non-negative number, got {}", row.eis),
            });
        }
        let country = row.country.trim().to_ascii_uppercase();
        if country.len() != 2 || !country.bytes().all(|b| b.is_ascii_uppercase()) {
            return Err(IngestError::ParseError {
                path: source.to_string(),
                line,
                reason: format!("country must be a 2-letter ISO code, got {:?}", row.country),
            });
        }
        let indicators = CountryIndicators {
            country,
            eis: row.eis,
            cpi: row.cpi as u8,
        };
        if let Some(existing) = out.iter_mut().find(|c| c.country == indicators.country) {
            log::warn!(
                "{source}:{line}: duplicate indicator row for {}, keeping the later value",
                indicators.country
            );
            *existing = indicators;
        } else {
            out.push(indicators);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_rows_sorted_by_rank() {
        let csv = "rank,ror_id,name,country\n\
                   2,https://ror.org/01d5jce07,Second U,SI\n\
                   1,https://ror.org/05kdjqf72,First U,AT\n\
                   3,00wjc7c48,Third U,HR\n";
        let rows = load_ranking_from_reader(csv.as_bytes(), "test.csv").unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].rank, 1);
        assert_eq!(rows[0].ror_id, "05kdjqf72");
        assert_eq!(rows[2].country, "HR");
    }

    #[test]
    fn ranking_rejects_duplicate_ror() {
        let csv = "rank,ror_id,name,country\n\
                   1,01d5jce07,A,SI\n\
                   2,https://ror.org/01d5jce07,B,SI\n";
        assert!(matches!(
            load_ranking_from_reader(csv.as_bytes(), "test.csv"),
            Err(IngestError::DuplicateInstitution { ror }) if ror == "01d5jce07"
        ));
    }

    #[test]
    fn ranking_header_only_is_empty() {
        let rows =
            load_ranking_from_reader("rank,ror_id,name,country\n".as_bytes(), "t.csv").unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn ranking_parse_error_carries_line() {
        let csv = "rank,ror_id,name,country\n\
                   1,01d5jce07,A,SI\n\
                   not_a_rank,01d5jce08,B,SI\n";
        match load_ranking_from_reader(csv.as_bytes(), "t.csv") {
            Err(IngestError::ParseError { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn indicators_parse_and_validate() {
        let csv = "country,eis,cpi\nSI,0.45,56\nAT,0.61,71\n";
        let rows = load_indicators_from_reader(csv.as_bytes(), "t.csv").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].country, "SI");
        assert_eq!(rows[0].cpi, 56);
        assert!((rows[0].eis - 0.45).abs() < 1e-12);
    }

    #[test]
    fn indicators_cpi_out_of_range() {
        let csv = "country,eis,cpi\nSI,0.45,150\n";
        assert!(matches!(
            load_indicators_from_reader(csv.as_bytes(), "t.csv"),
            Err(IngestError::RangeError { line: 2, .. })
        ));
    }

    #[test]
    fn indicators_duplicate_country_last_wins() {
        let csv = "country,eis,cpi\nSI,0.45,56\nSI,0.50,60\n";
        let rows = load_indicators_from_reader(csv.as_bytes(), "t.csv").unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].cpi, 60);
        assert!((rows[0].eis - 0.50).abs() < 1e-12);
    }
}
