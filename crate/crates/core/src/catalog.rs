//! Entity knowledge base and keyword mention matching.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid entity record {index}: {reason}")]
    Invalid { index: usize, reason: String },
    #[error("duplicate entity id `{0}`")]
    DuplicateId(String),
    #[error("i/o error reading catalog: {0}")]
    Io(#[from] std::io::Error),
}

/// A tracked entity: canonical name, alias keywords and a category label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub canonical_name: String,
    pub keywords: Vec<String>,
    pub category: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogDocument {
    entities: Vec<Entity>,
}

/// A keyword alias as a lowercase token sequence.
type KeywordTokens = Vec<String>;

/// Validated, immutable set of entities plus the inverse keyword index.
#[derive(Debug, Clone, Default)]
pub struct EntityCatalog {
    entities: Vec<Entity>,
    by_id: HashMap<String, usize>,
    index: BTreeMap<String, BTreeSet<String>>,
    // first token -> (full keyword token sequence, entity id)
    matcher: HashMap<String, Vec<(KeywordTokens, String)>>,
}

impl EntityCatalog {
    /// Builds a catalog from entity records, validating every invariant.
    pub fn from_entities(entities: Vec<Entity>) -> Result<Self, CatalogError> {
        let mut by_id = HashMap::with_capacity(entities.len());
        let mut index: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut matcher: HashMap<String, Vec<(KeywordTokens, String)>> = HashMap::new();

        for (i, entity) in entities.iter().enumerate() {
            let invalid = |reason: &str| CatalogError::Invalid {
                index: i,
                reason: reason.to_string(),
            };
            if entity.id.trim().is_empty() {
                return Err(invalid("empty id"));
            }
            if entity.category.trim().is_empty() {
                return Err(invalid("empty category"));
            }
            if entity.keywords.is_empty() {
                return Err(invalid("empty keyword set"));
            }
            if by_id.insert(entity.id.clone(), i).is_some() {
                return Err(CatalogError::DuplicateId(entity.id.clone()));
            }
            let mut seen = HashSet::new();
            for keyword in &entity.keywords {
                let key = text::fold(keyword);
                if key.is_empty() {
                    return Err(invalid("blank keyword"));
                }
                let tokens = text::tokens(&key);
                if tokens.is_empty() {
                    return Err(invalid("keyword has no letters or digits"));
                }
                index.entry(key).or_default().insert(entity.id.clone());
                if seen.insert(tokens.clone()) {
                    matcher
                        .entry(tokens[0].clone())
                        .or_default()
                        .push((tokens, entity.id.clone()));
                }
            }
        }

        Ok(Self {
            entities,
            by_id,
            index,
            matcher,
        })
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Entity> {
        self.by_id.get(id).map(|&i| &self.entities[i])
    }

    /// Normalized keyword -> ids of every entity claiming it.
    pub fn keyword_index(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.index
    }

    /// Distinct categories, sorted.
    pub fn categories(&self) -> BTreeSet<&str> {
        self.entities.iter().map(|e| e.category.as_str()).collect()
    }

    /// Entities of one category, in catalog order.
    pub fn in_category<'a>(&'a self, category: &'a str) -> impl Iterator<Item = &'a Entity> + 'a {
        self.entities.iter().filter(move |e| e.category == category)
    }

    /// Ids of every entity with a keyword occurring as a whole token
    /// sequence in `text`, compared case-insensitively.
    pub fn match_entities(&self, text: &str) -> BTreeSet<String> {
        let tokens = text::tokens(text);
        self.match_tokens(&tokens)
    }

    pub(crate) fn match_tokens(&self, tokens: &[String]) -> BTreeSet<String> {
        let mut found = BTreeSet::new();
        for (pos, token) in tokens.iter().enumerate() {
            let Some(candidates) = self.matcher.get(token) else {
                continue;
            };
            for (seq, id) in candidates {
                if tokens[pos..].starts_with(seq) {
                    found.insert(id.clone());
                }
            }
        }
        found
    }

    /// Keyword token sequences of one entity, longest first.
    pub(crate) fn keyword_sequences(&self, id: &str) -> Vec<KeywordTokens> {
        let Some(entity) = self.get(id) else {
            return Vec::new();
        };
        let mut seqs: Vec<KeywordTokens> = entity
            .keywords
            .iter()
            .map(|k| text::tokens(&text::fold(k)))
            .filter(|t| !t.is_empty())
            .collect();
        seqs.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        seqs.dedup();
        seqs
    }

    /// Serializes to the catalog file format.
    pub fn to_json(&self) -> String {
        let doc = CatalogDocument {
            entities: self.entities.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("catalog serializes")
    }
}

/// Reads and validates a catalog document.
///
/// The format is a UTF-8 JSON object `{"entities": [...]}` where each
/// record carries `id`, `canonical_name`, `keywords` and `category`.
pub fn load_catalog<R: Read>(mut source: R) -> Result<EntityCatalog, CatalogError> {
    let mut raw = String::new();
    source.read_to_string(&mut raw)?;
    let doc: CatalogDocument = serde_json::from_str(&raw).map_err(|e| CatalogError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    EntityCatalog::from_entities(doc.entities)
}
