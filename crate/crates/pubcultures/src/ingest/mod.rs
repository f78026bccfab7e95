//! Data ingestion: OpenAlex tally fetching with a local JSON cache, and CSV
//! loaders for the ranking and indicator input files.
//!
//! Fetching is strictly sequential: a single client paces every HTTP request
//! so that consecutive requests are spaced by at least
//! [`FetchConfig::inter_request_delay`]. Each fetched tally is written to the
//! cache (one JSON document per institution and year) before it is returned,
//! and a warm cache is served without touching the network.

mod cache;
mod client;
mod loaders;
mod publishers;

pub use cache::TallyCache;
pub use client::{fetch_tally, OpenAlexClient};
pub use loaders::{
    load_indicators, load_indicators_from_reader, load_ranking, load_ranking_from_reader,
};
pub use publishers::{Publisher, PublisherMap, BIG_FIVE};

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable overriding the default cache directory.
pub const CACHE_DIR_ENV: &str = "PUBCULTURES_CACHE_DIR";

/// Errors raised while fetching or loading input data.
#[derive(Debug, Error)]
pub enum IngestError {
    /// The request could not be completed, including after retrying
    /// retryable HTTP statuses (429 and 5xx) up to the configured limit.
    #[error("network error for {url}: {reason}")]
    NetworkError { url: String, reason: String },
    /// OpenAlex returned 404 for the institution's ROR.
    #[error("institution not found: {ror}")]
    InstitutionNotFound { ror: String },
    /// The response body is missing required fields or is not valid JSON.
    #[error("malformed response from {url}: {reason}")]
    MalformedResponse { url: String, reason: String },
    /// A CSV input failed to parse; line numbers are 1-based and include the
    /// header.
    #[error("parse error in {path} at line {line}: {reason}")]
    ParseError {
        path: String,
        line: u64,
        reason: String,
    },
    /// A ranking file listed the same institution twice.
    #[error("duplicate institution in ranking: {ror}")]
    DuplicateInstitution { ror: String },
    /// A value lies outside its permitted range.
    #[error("range error in {path} at line {line}: {reason}")]
    RangeError {
        path: String,
        line: u64,
        reason: String,
    },
    #[error("cache I/O error at {path}: {source}")]
    CacheIo {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cache entry {path} is not a valid tally document: {source}")]
    CacheFormat {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid ROR identifier: {input}")]
    InvalidRor { input: String },
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },
    /// A tally violates its counting invariants.
    #[error("invalid tally for {ror} year {year}: {reason}")]
    InvalidTally {
        ror: String,
        year: i32,
        reason: String,
    },
}

/// A ranked institution, keyed by its Research Organization Registry ID.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstitutionRef {
    /// Bare ROR identifier (the 9-character suffix of the ROR URL).
    pub ror_id: String,
    pub name: String,
    /// ISO 3166-1 alpha-2 country code, uppercase.
    pub country: String,
    /// Position in the ranking table, 1-based.
    pub rank: u32,
}

impl InstitutionRef {
    pub fn new(
        ror_id: &str,
        name: impl Into<String>,
        country: &str,
        rank: u32,
    ) -> Result<Self, IngestError> {
        let ror_id = normalize_ror(ror_id)?;
        let country = country.to_ascii_uppercase();
        if country.len() != 2 || !country.bytes().all(|b| b.is_ascii_uppercase()) {
            return Err(IngestError::InvalidConfig {
                reason: format!("country must be a 2-letter ISO code, got {country:?}"),
            });
        }
        if rank == 0 {
            return Err(IngestError::InvalidConfig {
                reason: "rank must be >= 1".into(),
            });
        }
        Ok(Self {
            ror_id,
            name: name.into(),
            country,
            rank,
        })
    }

    /// Full ROR URL form of the identifier.
    pub fn ror_url(&self) -> String {
        format!("https://ror.org/{}", self.ror_id)
    }
}

/// Normalize a ROR identifier (URL or bare form) to the bare 9-character ID.
pub fn normalize_ror(input: &str) -> Result<String, IngestError> {
    let trimmed = input.trim();
    let bare = trimmed
        .strip_prefix("https://ror.org/")
        .or_else(|| trimmed.strip_prefix("http://ror.org/"))
        .or_else(|| trimmed.strip_prefix("ror.org/"))
        .unwrap_or(trimmed)
        .to_ascii_lowercase();
    let valid = bare.len() == 9
        && bare.starts_with('0')
        && bare.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit());
    if valid {
        Ok(bare)
    } else {
        Err(IngestError::InvalidRor {
            input: input.to_string(),
        })
    }
}

/// Publication counts for one institution and year.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationTally {
    pub institution: InstitutionRef,
    pub year: i32,
    /// Article counts keyed by publisher label; works matching none of the
    /// tracked publishers fall into [`Publisher::Other`].
    pub counts_by_publisher: BTreeMap<Publisher, u64>,
    /// Total articles for the institution and year.
    pub total: u64,
    pub retracted: u64,
    pub open_access: u64,
    pub gold_open_access: u64,
}

impl PublicationTally {
    /// Count for one publisher label (0 when absent).
    pub fn count(&self, publisher: Publisher) -> u64 {
        self.counts_by_publisher.get(&publisher).copied().unwrap_or(0)
    }

    /// Sum of the five legacy-publisher counts.
    pub fn big_five_total(&self) -> u64 {
        BIG_FIVE.iter().map(|&p| self.count(p)).sum()
    }

    /// Check the counting invariants.
    pub fn validate(&self) -> Result<(), IngestError> {
        let err = |reason: String| IngestError::InvalidTally {
            ror: self.institution.ror_id.clone(),
            year: self.year,
            reason,
        };
        let by_publisher: u64 = self.counts_by_publisher.values().sum();
        if by_publisher > self.total {
            return Err(err(format!(
                "publisher counts sum to {by_publisher} > total {}",
                self.total
            )));
        }
        if self.retracted > self.total {
            return Err(err(format!(
                "retracted {} > total {}",
                self.retracted, self.total
            )));
        }
        if self.gold_open_access > self.open_access || self.open_access > self.total {
            return Err(err(format!(
                "open-access counts violate gold {} <= oa {} <= total {}",
                self.gold_open_access, self.open_access, self.total
            )));
        }
        Ok(())
    }
}

/// Per-country innovation and corruption-perception indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryIndicators {
    /// ISO 3166-1 alpha-2 code, uppercase.
    pub country: String,
    /// European Innovation Scoreboard composite, non-negative.
    pub eis: f64,
    /// Corruption Perception Index, integer score in [0, 100].
    pub cpi: u8,
}

/// Configuration for the OpenAlex client and cache.
#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub base_url: String,
    /// Minimum spacing between consecutive HTTP requests.
    pub inter_request_delay: Duration,
    /// Retries for HTTP 429 and 5xx responses.
    pub max_retries: u32,
    /// Sent as the `mailto` query parameter when present.
    pub contact_email: Option<String>,
    pub cache_dir: PathBuf,
}

impl Default for FetchConfig {
    /// Defaults: the public OpenAlex endpoint, a 30-second request interval,
    /// 3 retries, and `./openalex-cache` unless `PUBCULTURES_CACHE_DIR` is
    /// set.
    fn default() -> Self {
        let cache_dir = std::env::var_os(CACHE_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("openalex-cache"));
        Self {
            base_url: "https://api.openalex.org".to_string(),
            inter_request_delay: Duration::from_secs(30),
            max_retries: 3,
            contact_email: None,
            cache_dir,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ror_normalization_accepts_url_and_bare_forms() {
        assert_eq!(normalize_ror("https://ror.org/01d5jce07").unwrap(), "01d5jce07");
        assert_eq!(normalize_ror("01D5JCE07").unwrap(), "01d5jce07");
        assert_eq!(normalize_ror("ror.org/05kdjqf72").unwrap(), "05kdjqf72");
        assert!(normalize_ror("https://ror.org/00000nosuch").is_err());
        assert!(normalize_ror("1d5jce07x").is_err());
        assert!(normalize_ror("").is_err());
    }

    #[test]
    fn institution_ref_validates_fields() {
        let i = InstitutionRef::new("https://ror.org/01d5jce07", "Uni", "si", 3).unwrap();
        assert_eq!(i.country, "SI");
        assert_eq!(i.ror_url(), "https://ror.org/01d5jce07");
        assert!(InstitutionRef::new("01d5jce07", "Uni", "SVN", 3).is_err());
        assert!(InstitutionRef::new("01d5jce07", "Uni", "SI", 0).is_err());
    }

    #[test]
    fn tally_invariants() {
        let institution = InstitutionRef::new("01d5jce07", "Uni", "SI", 1).unwrap();
        let mut tally = PublicationTally {
            institution,
            year: 2022,
            counts_by_publisher: BTreeMap::from([
                (Publisher::Mdpi, 50),
                (Publisher::Elsevier, 30),
                (Publisher::Other, 20),
            ]),
            total: 100,
            retracted: 1,
            open_access: 70,
            gold_open_access: 55,
        };
        tally.validate().unwrap();
        tally.gold_open_access = 80;
        assert!(tally.validate().is_err());
        tally.gold_open_access = 55;
        tally.retracted = 101;
        assert!(tally.validate().is_err());
    }

    #[test]
    fn default_config_honors_cache_env() {
        // Env-var handling is covered indirectly; direct mutation of the
        // process environment would race with parallel tests.
        let config = FetchConfig::default();
        assert_eq!(config.inter_request_delay, Duration::from_secs(30));
        assert_eq!(config.max_retries, 3);
    }
}
