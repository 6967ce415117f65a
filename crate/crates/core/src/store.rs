//! Record storage keyed by (entity, UTC day).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{load_catalog, CatalogError, EntityCatalog};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt store file {path} at line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("store has no catalog at {0}")]
    MissingCatalog(PathBuf),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// One timestamped short text and the entities it mentions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextRecord {
    #[serde(rename = "id")]
    pub record_id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    pub entity_ids: BTreeSet<String>,
}

impl TextRecord {
    pub fn utc_date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }
}

/// An (entity, UTC calendar date) pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DayKey {
    pub entity_id: String,
    pub date: NaiveDate,
}

impl DayKey {
    pub fn new(entity_id: impl Into<String>, date: NaiveDate) -> Self {
        Self {
            entity_id: entity_id.into(),
            date,
        }
    }
}

/// Storage contract shared by the in-memory and on-disk stores.
///
/// Inserts are atomic with respect to readers: a record is either fully
/// visible under every one of its day keys or not at all.
pub trait RecordStore: Send + Sync {
    /// Stores a record. Returns `false` when its id is already present.
    fn insert(&self, record: TextRecord) -> Result<bool, StoreError>;

    fn contains(&self, record_id: &str) -> bool;

    /// Records of `key`, ordered by (timestamp, record_id).
    fn records_for(&self, key: &DayKey) -> Vec<TextRecord>;

    fn count_for(&self, key: &DayKey) -> usize;

    /// Dates with at least one record for the entity, ascending.
    fn days_with_data(&self, entity_id: &str) -> Vec<NaiveDate>;

    /// Earliest and latest UTC date over all stored records.
    fn date_bounds(&self) -> Option<(NaiveDate, NaiveDate)>;

    /// Number of distinct stored records.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Default)]
struct Index {
    records: HashMap<String, Arc<TextRecord>>,
    by_day: BTreeMap<DayKey, BTreeSet<(DateTime<Utc>, String)>>,
    dates: BTreeMap<NaiveDate, usize>,
}

impl Index {
    fn insert(&mut self, record: TextRecord) -> bool {
        if self.records.contains_key(&record.record_id) {
            return false;
        }
        let date = record.utc_date();
        for entity in &record.entity_ids {
            self.by_day
                .entry(DayKey::new(entity.clone(), date))
                .or_default()
                .insert((record.timestamp, record.record_id.clone()));
        }
        *self.dates.entry(date).or_default() += 1;
        self.records
            .insert(record.record_id.clone(), Arc::new(record));
        true
    }

    fn records_for(&self, key: &DayKey) -> Vec<TextRecord> {
        self.by_day
            .get(key)
            .map(|ids| {
                ids.iter()
                    .map(|(_, id)| self.records[id].as_ref().clone())
                    .collect()
            })
            .unwrap_or_default()
    }

    fn days_with_data(&self, entity_id: &str) -> Vec<NaiveDate> {
        let start = DayKey::new(entity_id, NaiveDate::MIN);
        self.by_day
            .range(start..)
            .take_while(|(k, _)| k.entity_id == entity_id)
            .map(|(k, _)| k.date)
            .collect()
    }
}

/// Volatile store used by tests and one-shot pipelines.
#[derive(Debug, Default)]
pub struct MemoryStore {
    index: RwLock<Index>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl RecordStore for MemoryStore {
    fn insert(&self, record: TextRecord) -> Result<bool, StoreError> {
        Ok(self.index.write().unwrap().insert(record))
    }

    fn contains(&self, record_id: &str) -> bool {
        self.index.read().unwrap().records.contains_key(record_id)
    }

    fn records_for(&self, key: &DayKey) -> Vec<TextRecord> {
        self.index.read().unwrap().records_for(key)
    }

    fn count_for(&self, key: &DayKey) -> usize {
        self.index
            .read()
            .unwrap()
            .by_day
            .get(key)
            .map_or(0, BTreeSet::len)
    }

    fn days_with_data(&self, entity_id: &str) -> Vec<NaiveDate> {
        self.index.read().unwrap().days_with_data(entity_id)
    }

    fn date_bounds(&self) -> Option<(NaiveDate, NaiveDate)> {
        let index = self.index.read().unwrap();
        let first = index.dates.keys().next()?;
        let last = index.dates.keys().next_back()?;
        Some((*first, *last))
    }

    fn len(&self) -> usize {
        self.index.read().unwrap().records.len()
    }
}

const RECORDS_FILE: &str = "records.jsonl";
const CATALOG_FILE: &str = "catalog.json";

/// On-disk store: a directory holding an append-only JSON-lines record
/// log and the catalog the records were matched against. The log is
/// replayed into memory on open.
#[derive(Debug)]
pub struct FileStore {
    dir: PathBuf,
    memory: MemoryStore,
    log: Mutex<BufWriter<File>>,
}

impl FileStore {
    /// Opens (creating if needed) the store at `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| StoreError::Io { path, source }
        };
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        let log_path = dir.join(RECORDS_FILE);
        let memory = MemoryStore::new();
        if log_path.exists() {
            let file = File::open(&log_path).map_err(io(&log_path))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(io(&log_path))?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: TextRecord =
                    serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
                        path: log_path.clone(),
                        line: i + 1,
                        message: e.to_string(),
                    })?;
                memory.insert(record)?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(io(&log_path))?;
        Ok(Self {
            dir,
            memory,
            log: Mutex::new(BufWriter::new(file)),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Persists the catalog records are matched against.
    pub fn save_catalog(&self, catalog: &EntityCatalog) -> Result<(), StoreError> {
        let path = self.dir.join(CATALOG_FILE);
        fs::write(&path, catalog.to_json()).map_err(|source| StoreError::Io { path, source })
    }

    pub fn load_catalog(&self) -> Result<EntityCatalog, StoreError> {
        let path = self.dir.join(CATALOG_FILE);
        if !path.exists() {
            return Err(StoreError::MissingCatalog(path));
        }
        let file = File::open(&path).map_err(|source| StoreError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(load_catalog(BufReader::new(file))?)
    }

    /// Flushes buffered appends to disk.
    pub fn flush(&self) -> Result<(), StoreError> {
        let path = self.dir.join(RECORDS_FILE);
        self.log
            .lock()
            .unwrap()
            .flush()
            .map_err(|source| StoreError::Io { path, source })
    }
}

impl RecordStore for FileStore {
    fn insert(&self, record: TextRecord) -> Result<bool, StoreError> {
        // the log lock serializes writers; readers only take the index lock
        let mut log = self.log.lock().unwrap();
        if self.memory.contains(&record.record_id) {
            return Ok(false);
        }
        let mut line = serde_json::to_string(&record).expect("record serializes");
        line.push('\n');
        log.write_all(line.as_bytes())
            .map_err(|source| StoreError::Io {
                path: self.dir.join(RECORDS_FILE),
                source,
            })?;
        self.memory.insert(record)
    }

    fn contains(&self, record_id: &str) -> bool {
        self.memory.contains(record_id)
    }

    fn records_for(&self, key: &DayKey) -> Vec<TextRecord> {
        self.memory.records_for(key)
    }

    fn count_for(&self, key: &DayKey) -> usize {
        self.memory.count_for(key)
    }

    fn days_with_data(&self, entity_id: &str) -> Vec<NaiveDate> {
        self.memory.days_with_data(entity_id)
    }

    fn date_bounds(&self) -> Option<(NaiveDate, NaiveDate)> {
        self.memory.date_bounds()
    }

    fn len(&self) -> usize {
        self.memory.len()
    }
}

impl Drop for FileStore {
    fn drop(&mut self) {
        if let Ok(mut log) = self.log.lock() {
            let _ = log.flush();
        }
    }
}
