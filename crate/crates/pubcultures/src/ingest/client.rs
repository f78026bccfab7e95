//! Rate-limited OpenAlex client assembling per-institution-year tallies from
//! grouped count queries.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Deserialize;

use super::{
    FetchConfig, IngestError, InstitutionRef, PublicationTally, Publisher, PublisherMap,
    TallyCache, BIG_FIVE,
};

/// Grouped-count response shape shared by all `group_by` queries.
#[derive(Debug, Deserialize)]
struct GroupedResponse {
    meta: Meta,
    group_by: Vec<Group>,
}

#[derive(Debug, Deserialize)]
struct Meta {
    count: u64,
}

#[derive(Debug, Deserialize)]
struct Group {
    key: Option<String>,
    key_display_name: Option<String>,
    count: u64,
}

/// Sequential OpenAlex client with an enforced inter-request delay and a
/// local tally cache.
///
/// One tally costs four grouped count queries (publisher host organization,
/// retraction flag, open-access flag, open-access status). Every request is
/// paced so consecutive request starts are spaced by at least
/// [`FetchConfig::inter_request_delay`]; HTTP 429 and 5xx responses are
/// retried with exponential backoff up to [`FetchConfig::max_retries`].
pub struct OpenAlexClient {
    config: FetchConfig,
    publishers: PublisherMap,
    cache: TallyCache,
    http: reqwest::blocking::Client,
    last_request: Mutex<Option<Instant>>,
}

impl OpenAlexClient {
    pub fn new(config: FetchConfig) -> Result<Self, IngestError> {
        Self::with_publishers(config, PublisherMap::builtin().clone())
    }

    pub fn with_publishers(
        config: FetchConfig,
        publishers: PublisherMap,
    ) -> Result<Self, IngestError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| IngestError::InvalidConfig {
                reason: format!("http client: {e}"),
            })?;
        let cache = TallyCache::new(config.cache_dir.clone());
        Ok(Self {
            config,
            publishers,
            cache,
            http,
            last_request: Mutex::new(None),
        })
    }

    pub fn cache(&self) -> &TallyCache {
        &self.cache
    }

    /// Fetch the tally for one institution and year, serving warm entries
    /// from the cache without network traffic. Cold results are written to
    /// the cache before they are returned.
    pub fn fetch_tally(
        &self,
        institution: &InstitutionRef,
        year: i32,
    ) -> Result<PublicationTally, IngestError> {
        if let Some(cached) = self.cache.load(&institution.ror_id, year)? {
            return Ok(cached);
        }

        let publishers =
            self.grouped(institution, year, "primary_location.source.host_organization")?;
        let retracted = self.grouped(institution, year, "is_retracted")?;
        let is_oa = self.grouped(institution, year, "open_access.is_oa")?;
        let oa_status = self.grouped(institution, year, "open_access.oa_status")?;

        let total = retracted.meta.count;
        let retracted_count = sum_where(&retracted, |key| key == "true");
        let oa_count = sum_where(&is_oa, |key| key == "true");
        let gold_count = sum_where(&oa_status, |key| key == "gold");

        let mut counts_by_publisher = std::collections::BTreeMap::new();
        for group in &publishers.group_by {
            let label = self
                .publishers
                .classify(group.key.as_deref(), group.key_display_name.as_deref());
            if label != Publisher::Other {
                *counts_by_publisher.entry(label).or_insert(0) += group.count;
            }
        }
        for p in BIG_FIVE.iter().chain([&Publisher::Mdpi]) {
            counts_by_publisher.entry(*p).or_insert(0);
        }
        let named: u64 = counts_by_publisher.values().sum();
        // Works whose host organization is unknown or untracked; group lists
        // are capped by the API, so this is a difference, not a group sum.
        counts_by_publisher.insert(Publisher::Other, total.saturating_sub(named));

        let tally = PublicationTally {
            institution: institution.clone(),
            year,
            counts_by_publisher,
            total,
            retracted: retracted_count,
            open_access: oa_count,
            gold_open_access: gold_count,
        };
        tally.validate()?;
        self.cache.store(&tally)?;
        Ok(tally)
    }

    fn grouped(
        &self,
        institution: &InstitutionRef,
        year: i32,
        group_by: &str,
    ) -> Result<GroupedResponse, IngestError> {
        let mut url = format!(
            "{}/works?filter=institutions.ror:{},publication_year:{},type:article,is_paratext:false&group_by={}&per_page=200",
            self.config.base_url.trim_end_matches('/'),
            institution.ror_id,
            year,
            group_by,
        );
        if let Some(email) = &self.config.contact_email {
            url.push_str("&mailto=");
            url.push_str(email);
        }

        let mut attempt = 0u32;
        loop {
            self.pace();
            let response = self.http.get(&url).send().map_err(|e| {
                IngestError::NetworkError {
                    url: url.clone(),
                    reason: e.to_string(),
                }
            })?;
            let status = response.status();
            if status.is_success() {
                let body = response.text().map_err(|e| IngestError::NetworkError {
                    url: url.clone(),
                    reason: format!("reading body: {e}"),
                })?;
                return serde_json::from_str(&body).map_err(|e| {
                    IngestError::MalformedResponse {
                        url: url.clone(),
                        reason: e.to_string(),
                    }
                });
            }
            if status.as_u16() == 404 {
                return Err(IngestError::InstitutionNotFound {
                    ror: institution.ror_id.clone(),
                });
            }
            let retryable = status.as_u16() == 429 || status.is_server_error();
            if retryable && attempt < self.config.max_retries {
                std::thread::sleep(backoff(self.config.inter_request_delay, attempt));
                attempt += 1;
                continue;
            }
            return Err(IngestError::NetworkError {
                url,
                reason: if retryable {
                    format!("HTTP {status} after {attempt} retries")
                } else {
                    format!("unexpected HTTP status {status}")
                },
            });
        }
    }

    /// Block until the configured delay since the previous request start has
    /// elapsed, then mark this request's start.
    fn pace(&self) {
        let mut last = self.last_request.lock().expect("limiter lock");
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < self.config.inter_request_delay {
                std::thread::sleep(self.config.inter_request_delay - elapsed);
            }
        }
        *last = Some(Instant::now());
    }
}

fn backoff(delay: Duration, attempt: u32) -> Duration {
    delay.max(Duration::from_millis(100)) * 2u32.saturating_pow(attempt)
}

fn sum_where(response: &GroupedResponse, pred: impl Fn(&str) -> bool) -> u64 {
    response
        .group_by
        .iter()
        .filter(|g| g.key.as_deref().map(&pred).unwrap_or(false))
        .map(|g| g.count)
        .sum()
}

/// One-shot convenience wrapper: build a client for `config` and fetch a
/// single tally. Batch callers should construct [`OpenAlexClient`] once so
/// request pacing spans the whole batch.
pub fn fetch_tally(
    institution: &InstitutionRef,
    year: i32,
    config: &FetchConfig,
) -> Result<PublicationTally, IngestError> {
    OpenAlexClient::new(config.clone())?.fetch_tally(institution, year)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_grows_exponentially_from_delay_floor() {
        let d = Duration::from_millis(10);
        assert_eq!(backoff(d, 0), Duration::from_millis(100));
        assert_eq!(backoff(d, 1), Duration::from_millis(200));
        assert_eq!(backoff(d, 2), Duration::from_millis(400));
        let slow = Duration::from_secs(30);
        assert_eq!(backoff(slow, 1), Duration::from_secs(60));
    }
}
