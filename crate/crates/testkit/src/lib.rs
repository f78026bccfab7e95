//! Shared test support: a miniature in-process OpenAlex stand-in and loaders
//! for the pinned data snapshot under `data/snapshot/`.

pub mod stub;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use pubcultures::ingest::{InstitutionRef, PublicationTally, Publisher, TallyCache};

/// Repository-level directory holding the pinned snapshot inputs.
pub fn snapshot_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/snapshot")
}

pub fn ranking_path() -> PathBuf {
    snapshot_dir().join("ranking.csv")
}

pub fn indicators_path() -> PathBuf {
    snapshot_dir().join("indicators.csv")
}

#[derive(Debug, serde::Deserialize)]
struct TallyRow {
    ror_id: String,
    year: i32,
    mdpi: u64,
    elsevier: u64,
    springer_nature: u64,
    wiley: u64,
    taylor_francis: u64,
    sage: u64,
    other: u64,
    retracted: u64,
    open_access: u64,
    gold_open_access: u64,
}

/// Load the pinned snapshot tallies, joining `tallies.csv` with
/// `ranking.csv` for institution identity.
pub fn load_snapshot_tallies() -> Vec<PublicationTally> {
    let ranking = pubcultures::ingest::load_ranking(ranking_path()).expect("snapshot ranking");
    let by_ror: HashMap<String, InstitutionRef> = ranking
        .into_iter()
        .map(|i| (i.ror_id.clone(), i))
        .collect();

    let mut reader =
        csv::Reader::from_path(snapshot_dir().join("tallies.csv")).expect("snapshot tallies");
    let mut tallies = Vec::new();
    for row in reader.deserialize::<TallyRow>() {
        let row = row.expect("snapshot tally row");
        let institution = by_ror
            .get(&row.ror_id)
            .unwrap_or_else(|| panic!("tally for unranked institution {}", row.ror_id))
            .clone();
        let counts_by_publisher = std::collections::BTreeMap::from([
            (Publisher::Mdpi, row.mdpi),
            (Publisher::Elsevier, row.elsevier),
            (Publisher::SpringerNature, row.springer_nature),
            (Publisher::Wiley, row.wiley),
            (Publisher::TaylorFrancis, row.taylor_francis),
            (Publisher::Sage, row.sage),
            (Publisher::Other, row.other),
        ]);
        let total = counts_by_publisher.values().sum();
        let tally = PublicationTally {
            institution,
            year: row.year,
            counts_by_publisher,
            total,
            retracted: row.retracted,
            open_access: row.open_access,
            gold_open_access: row.gold_open_access,
        };
        tally.validate().expect("snapshot tally invariants");
        tallies.push(tally);
    }
    tallies
}

/// Write every snapshot tally into a cache rooted at `dir`, the exact layout
/// `fetch` would have produced.
pub fn materialize_cache(dir: &Path) -> TallyCache {
    let cache = TallyCache::new(dir);
    for tally in load_snapshot_tallies() {
        cache.store(&tally).expect("store snapshot tally");
    }
    cache
}
