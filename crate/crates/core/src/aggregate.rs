//! Daily entity-centric meta-documents and scoped corpora.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::EntityCatalog;
use crate::ingest::InvalidRange;
use crate::preprocess::{Preprocessed, Preprocessor};
use crate::store::{DayKey, RecordStore};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AggregateError {
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error(transparent)]
    Range(#[from] InvalidRange),
}

/// Every surviving term of one entity's texts on one UTC day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaDocument {
    pub key: DayKey,
    pub term_counts: BTreeMap<String, u32>,
    pub source_record_ids: Vec<String>,
    pub total_tokens: u64,
}

impl MetaDocument {
    pub fn empty(key: DayKey) -> Self {
        Self {
            key,
            term_counts: BTreeMap::new(),
            source_record_ids: Vec::new(),
            total_tokens: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.total_tokens == 0
    }
}

/// Counts the terms of every non-discarded record of `key`.
pub fn build_meta_document(
    key: &DayKey,
    store: &dyn RecordStore,
    preprocessor: &Preprocessor,
) -> MetaDocument {
    let mut doc = MetaDocument::empty(key.clone());
    for record in store.records_for(key) {
        let Preprocessed::Tokens(tokens) = preprocessor.run(&record, &key.entity_id) else {
            continue;
        };
        if tokens.tokens().is_empty() {
            continue;
        }
        for token in tokens.into_tokens() {
            *doc.term_counts.entry(token).or_default() += 1;
            doc.total_tokens += 1;
        }
        doc.source_record_ids.push(record.record_id);
    }
    doc
}

/// Which entities a corpus covers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scope {
    Global,
    Category(String),
    Entity(String),
}

impl Scope {
    /// Stable label: `global`, `category:<label>` or `entity:<id>`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Global => f.write_str("global"),
            Scope::Category(c) => write!(f, "category:{c}"),
            Scope::Entity(e) => write!(f, "entity:{e}"),
        }
    }
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "global" {
            return Ok(Scope::Global);
        }
        match s.split_once(':') {
            Some(("category", c)) if !c.is_empty() => Ok(Scope::Category(c.to_string())),
            Some(("entity", e)) if !e.is_empty() => Ok(Scope::Entity(e.to_string())),
            _ => Err(format!("invalid scope label `{s}`")),
        }
    }
}

/// Inclusive UTC date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DateRange {
    pub from: NaiveDate,
    pub to: NaiveDate,
}

impl DateRange {
    pub fn new(from: NaiveDate, to: NaiveDate) -> Result<Self, InvalidRange> {
        if from > to {
            return Err(InvalidRange { from, to });
        }
        Ok(Self { from, to })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.from <= date && date <= self.to
    }
}

impl fmt::Display for DateRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.from, self.to)
    }
}

/// Meta-documents plus their shared, lexicographically ordered vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    scope: Scope,
    documents: Vec<MetaDocument>,
    vocabulary: Vec<String>,
    term_index: HashMap<String, usize>,
}

impl Corpus {
    /// Assembles a corpus, dropping empty documents and ordering the rest
    /// by key.
    pub fn new(scope: Scope, documents: impl IntoIterator<Item = MetaDocument>) -> Self {
        let mut documents: Vec<MetaDocument> =
            documents.into_iter().filter(|d| !d.is_empty()).collect();
        documents.sort_by(|a, b| a.key.cmp(&b.key));
        let vocabulary: Vec<String> = documents
            .iter()
            .flat_map(|d| d.term_counts.keys())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .cloned()
            .collect();
        let term_index = vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            scope,
            documents,
            vocabulary,
            term_index,
        }
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn documents(&self) -> &[MetaDocument] {
        &self.documents
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.term_index.get(term).copied()
    }

    pub fn term_at(&self, index: usize) -> Option<&str> {
        self.vocabulary.get(index).map(String::as_str)
    }

    /// Each document as a list of vocabulary ids, terms in vocabulary
    /// order, each repeated by its count.
    pub fn token_ids(&self) -> Vec<Vec<usize>> {
        self.documents
            .iter()
            .map(|d| {
                d.term_counts
                    .iter()
                    .flat_map(|(t, &n)| std::iter::repeat_n(self.term_index[t], n as usize))
                    .collect()
            })
            .collect()
    }

    /// Writes one line per document: entity id, date, then `term:count`
    /// pairs, tab separated.
    pub fn write_interchange<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for doc in &self.documents {
            write!(out, "{}\t{}", doc.key.entity_id, doc.key.date)?;
            for (term, count) in &doc.term_counts {
                write!(out, "\t{term}:{count}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Entities covered by `scope`, validated against the catalog.
pub fn scope_entities<'a>(
    scope: &'a Scope,
    catalog: &'a EntityCatalog,
) -> Result<Vec<&'a str>, AggregateError> {
    match scope {
        Scope::Global => Ok(catalog.entities().iter().map(|e| e.id.as_str()).collect()),
        Scope::Category(c) => {
            let ids: Vec<&str> = catalog.in_category(c).map(|e| e.id.as_str()).collect();
            if ids.is_empty() {
                return Err(AggregateError::UnknownCategory(c.clone()));
            }
            Ok(ids)
        }
        Scope::Entity(id) => catalog
            .get(id)
            .map(|e| vec![e.id.as_str()])
            .ok_or_else(|| AggregateError::UnknownEntity(id.clone())),
    }
}

/// One document per (entity, day) with surviving terms, for every entity
/// in `scope` and every day in `range`.
pub fn build_corpus(
    scope: &Scope,
    range: DateRange,
    store: &dyn RecordStore,
    catalog: &EntityCatalog,
    preprocessor: &Preprocessor,
) -> Result<Corpus, AggregateError> {
    let keys: Vec<DayKey> = scope_entities(scope, catalog)?
        .into_iter()
        .flat_map(|id| {
            store
                .days_with_data(id)
                .into_iter()
                .filter(|d| range.contains(*d))
                .map(move |d| DayKey::new(id, d))
        })
        .collect();
    let documents: Vec<MetaDocument> = keys
        .par_iter()
        .map(|key| build_meta_document(key, store, preprocessor))
        .collect();
    Ok(Corpus::new(scope.clone(), documents))
}

/// Memoized meta-documents keyed by (entity, date, config fingerprint).
#[derive(Debug, Default)]
pub struct MetaDocumentCache {
    entries: RwLock<HashMap<(DayKey, String), Arc<MetaDocument>>>,
}

impl MetaDocumentCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_build(
        &self,
        key: &DayKey,
        store: &dyn RecordStore,
        preprocessor: &Preprocessor,
    ) -> Arc<MetaDocument> {
        let cache_key = (key.clone(), preprocessor.config().fingerprint());
        if let Some(doc) = self.entries.read().unwrap().get(&cache_key) {
            return Arc::clone(doc);
        }
        let doc = Arc::new(build_meta_document(key, store, preprocessor));
        self.entries
            .write()
            .unwrap()
            .entry(cache_key)
            .or_insert(doc)
            .clone()
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
