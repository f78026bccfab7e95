//! Publisher labels and the lookup table that maps OpenAlex
//! host-organization groups onto them.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::IngestError;

/// Publisher labels tracked by the tallies.
///
/// The five legacy labels together form [`BIG_FIVE`]; everything that is not
/// MDPI or one of those five is `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Publisher {
    #[serde(rename = "MDPI")]
    Mdpi,
    #[serde(rename = "Elsevier")]
    Elsevier,
    #[serde(rename = "Springer Nature")]
    SpringerNature,
    #[serde(rename = "Wiley")]
    Wiley,
    #[serde(rename = "Taylor&Francis")]
    TaylorFrancis,
    #[serde(rename = "Sage")]
    Sage,
    #[serde(rename = "Other")]
    Other,
}

/// The legacy commercial publishers whose counts form the ρ denominator
/// together with MDPI.
pub const BIG_FIVE: [Publisher; 5] = [
    Publisher::Elsevier,
    Publisher::SpringerNature,
    Publisher::Wiley,
    Publisher::TaylorFrancis,
    Publisher::Sage,
];

impl Publisher {
    pub fn label(&self) -> &'static str {
        match self {
            Publisher::Mdpi => "MDPI",
            Publisher::Elsevier => "Elsevier",
            Publisher::SpringerNature => "Springer Nature",
            Publisher::Wiley => "Wiley",
            Publisher::TaylorFrancis => "Taylor&Francis",
            Publisher::Sage => "Sage",
            Publisher::Other => "Other",
        }
    }
}

impl fmt::Display for Publisher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Deserialize)]
struct LookupFile {
    version: String,
    publishers: Vec<LookupEntry>,
}

#[derive(Debug, Deserialize)]
struct LookupEntry {
    label: Publisher,
    #[serde(default)]
    openalex_ids: Vec<String>,
    #[serde(default)]
    aliases: Vec<String>,
}

/// Maps OpenAlex host-organization groups to publisher labels.
///
/// Matching is by canonical OpenAlex publisher ID first (imprints are listed
/// under their parent label, so e.g. Nature Portfolio counts as Springer
/// Nature), with a normalized display-name fallback for groups whose ID is
/// not in the table. Anything unmatched is [`Publisher::Other`].
#[derive(Debug, Clone)]
pub struct PublisherMap {
    version: String,
    by_id: HashMap<String, Publisher>,
    by_alias: HashMap<String, Publisher>,
}

const BUILTIN_LOOKUP: &str = include_str!("../../assets/publishers.json");

fn normalize_name(name: &str) -> String {
    name.trim().to_lowercase()
}

impl PublisherMap {
    /// The lookup table bundled with the crate.
    pub fn builtin() -> &'static PublisherMap {
        static MAP: OnceLock<PublisherMap> = OnceLock::new();
        MAP.get_or_init(|| {
            PublisherMap::from_json(BUILTIN_LOOKUP).expect("bundled publisher table is valid")
        })
    }

    pub fn from_json(json: &str) -> Result<Self, IngestError> {
        let file: LookupFile =
            serde_json::from_str(json).map_err(|e| IngestError::InvalidConfig {
                reason: format!("publisher lookup: {e}"),
            })?;
        let mut by_id = HashMap::new();
        let mut by_alias = HashMap::new();
        for entry in file.publishers {
            for id in entry.openalex_ids {
                by_id.insert(id.to_ascii_uppercase(), entry.label);
            }
            for alias in entry.aliases {
                by_alias.insert(normalize_name(&alias), entry.label);
            }
        }
        Ok(Self {
            version: file.version,
            by_id,
            by_alias,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, IngestError> {
        let json = std::fs::read_to_string(path).map_err(|e| IngestError::CacheIo {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_json(&json)
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    /// Classify one host-organization group by its key (an OpenAlex entity
    /// URL or bare ID) and display name.
    pub fn classify(&self, key: Option<&str>, display_name: Option<&str>) -> Publisher {
        if let Some(key) = key {
            let bare = key.rsplit('/').next().unwrap_or(key).to_ascii_uppercase();
            if let Some(&label) = self.by_id.get(&bare) {
                return label;
            }
        }
        if let Some(name) = display_name {
            if let Some(&label) = self.by_alias.get(&normalize_name(name)) {
                return label;
            }
        }
        Publisher::Other
    }
}
