//! Local tally cache: one pretty-printed JSON document per institution and
//! year, named `{ror}_{year}.json`, so snapshots stay human-inspectable and
//! diffable.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{IngestError, PublicationTally};

#[derive(Debug, Clone)]
pub struct TallyCache {
    dir: PathBuf,
}

impl TallyCache {
    /// A cache rooted at `dir`. The directory is created on first store.
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Path of the cache entry for `(ror, year)`.
    pub fn entry_path(&self, ror_bare: &str, year: i32) -> PathBuf {
        self.dir.join(format!("{ror_bare}_{year}.json"))
    }

    /// Load a cached tally, `Ok(None)` when absent.
    pub fn load(&self, ror_bare: &str, year: i32) -> Result<Option<PublicationTally>, IngestError> {
        let path = self.entry_path(ror_bare, year);
        let bytes = match fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(IngestError::CacheIo { path, source: e }),
        };
        let tally: PublicationTally = serde_json::from_slice(&bytes)
            .map_err(|e| IngestError::CacheFormat {
                path: path.clone(),
                source: e,
            })?;
        tally.validate()?;
        Ok(Some(tally))
    }

    /// Write a tally, replacing any existing entry. Returns the entry path.
    ///
    /// Writes go through a temporary file and a rename so readers never see
    /// a partial document.
    pub fn store(&self, tally: &PublicationTally) -> Result<PathBuf, IngestError> {
        tally.validate()?;
        fs::create_dir_all(&self.dir).map_err(|e| IngestError::CacheIo {
            path: self.dir.clone(),
            source: e,
        })?;
        let path = self.entry_path(&tally.institution.ror_id, tally.year);
        let mut body = serde_json::to_vec_pretty(tally).expect("tally serializes");
        body.push(b'\n');
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, &body).map_err(|e| IngestError::CacheIo {
            path: tmp.clone(),
            source: e,
        })?;
        fs::rename(&tmp, &path).map_err(|e| IngestError::CacheIo {
            path: path.clone(),
            source: e,
        })?;
        Ok(path)
    }

    /// SHA-256 over the cache contents (file names and bytes, sorted by
    /// name), identifying the data snapshot an analysis ran against.
    pub fn digest(&self) -> Result<String, IngestError> {
        let mut names = Vec::new();
        match fs::read_dir(&self.dir) {
            Ok(entries) => {
                for entry in entries {
                    let entry = entry.map_err(|e| IngestError::CacheIo {
                        path: self.dir.clone(),
                        source: e,
                    })?;
                    let name = entry.file_name();
                    if name.to_string_lossy().ends_with(".json") {
                        names.push(name);
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => {
                return Err(IngestError::CacheIo {
                    path: self.dir.clone(),
                    source: e,
                })
            }
        }
        names.sort();
        let mut hasher = Sha256::new();
        for name in &names {
            let path = self.dir.join(name);
            let bytes = fs::read(&path).map_err(|e| IngestError::CacheIo {
                path: path.clone(),
                source: e,
            })?;
            hasher.update(name.to_string_lossy().as_bytes());
            hasher.update([0u8]);
            hasher.update(&bytes);
            hasher.update([0u8]);
        }
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        Ok(hex)
    }
}
