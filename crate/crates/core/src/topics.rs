//! Fitted topic models: fitting, queries, scoping and persistence.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::aggregate::{build_corpus, AggregateError, Corpus, DateRange, Scope};
use crate::catalog::EntityCatalog;
use crate::lda::{run_chain, LdaError, LdaParams};
use crate::preprocess::Preprocessor;
use crate::store::{DayKey, RecordStore};

pub const MODEL_FORMAT: &str = "sentibubbles-topic-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TopicError {
    #[error(transparent)]
    Lda(#[from] LdaError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error("topic {topic} out of range for a model with {topics} topics")]
    TopicOutOfRange { topic: usize, topics: usize },
    #[error("no document for {} on {}", .0.entity_id, .0.date)]
    UnknownDocument(DayKey),
    #[error("model file {path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("model i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermWeight {
    pub term: String,
    pub weight: f64,
}

/// A topic identified by its most probable terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub topic_id: usize,
    pub top_terms: Vec<TermWeight>,
}

/// A topic together with its share of one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTopic {
    pub topic: TopicSummary,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub scope: String,
    pub date_range: Option<DateRange>,
    pub params: LdaParams,
    pub config_fingerprint: String,
    pub vocabulary: Vec<String>,
    /// topics x vocabulary
    pub phi: Vec<Vec<f64>>,
    /// documents x topics, rows aligned with `doc_keys`
    pub theta: Vec<Vec<f64>>,
    pub doc_keys: Vec<DayKey>,
}

/// Fits a model to `corpus`.
pub fn fit(corpus: &Corpus, params: &LdaParams) -> Result<TopicModel, TopicError> {
    let docs = corpus.token_ids();
    let estimate = run_chain(&docs, corpus.vocabulary().len(), params)?;
    Ok(TopicModel {
        scope: corpus.scope().label(),
        date_range: None,
        params: *params,
        config_fingerprint: String::new(),
        vocabulary: corpus.vocabulary().to_vec(),
        phi: estimate.phi,
        theta: estimate.theta,
        doc_keys: corpus.documents().iter().map(|d| d.key.clone()).collect(),
    })
}

fn ranked<T: Copy + Ord>(weights: impl Iterator<Item = (T, f64)>) -> Vec<(T, f64)> {
    let mut v: Vec<(T, f64)> = weights.collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

impl TopicModel {
    pub fn topics(&self) -> usize {
        self.params.topics
    }

    /// The `n` most probable terms of a topic, ties broken by term.
    pub fn top_words(&self, topic_id: usize, n: usize) -> Result<TopicSummary, TopicError> {
        let row = self.phi.get(topic_id).ok_or(TopicError::TopicOutOfRange {
            topic: topic_id,
            topics: self.topics(),
        })?;
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| {
            row[b]
                .total_cmp(&row[a])
                .then_with(|| self.vocabulary[a].cmp(&self.vocabulary[b]))
        });
        let top_terms = order
            .into_iter()
            .take(n)
            .map(|v| TermWeight {
                term: self.vocabulary[v].clone(),
                weight: row[v],
            })
            .collect();
        Ok(TopicSummary {
            topic_id,
            top_terms,
        })
    }

    pub fn document_index(&self, key: &DayKey) -> Option<usize> {
        self.doc_keys.iter().position(|k| k == key)
    }

    /// The `n_topics` heaviest topics of a document, ties broken by id.
    pub fn topics_for_day(
        &self,
        key: &DayKey,
        n_topics: usize,
        n_words: usize,
    ) -> Result<Vec<WeightedTopic>, TopicError> {
        let d = self
            .document_index(key)
            .ok_or_else(|| TopicError::UnknownDocument(key.clone()))?;
        ranked(self.theta[d].iter().copied().enumerate())
            .into_iter()
            .take(n_topics)
            .map(|(t, weight)| {
                Ok(WeightedTopic {
                    topic: self.top_words(t, n_words)?,
                    weight,
                })
            })
            .collect()
    }

    /// Stable digest of the fitting parameters.
    pub fn params_fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(&(&self.params, &self.config_fingerprint))
            .expect("params serialize");
        hex::encode(&Sha256::digest(&canonical)[..8])
    }

    pub fn write<W: Write>(&self, out: W) -> serde_json::Result<()> {
        serde_json::to_writer(
            out,
            &ModelFile {
                format: MODEL_FORMAT.to_string(),
                version: MODEL_VERSION,
                model: self.clone(),
            },
        )
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("model serializes");
        buf
    }

    pub fn read<R: Read>(source: R) -> Result<Self, String> {
        let file: ModelFile = serde_json::from_reader(source).map_err(|e| e.to_string())?;
        if file.format != MODEL_FORMAT {
            return Err(format!("unexpected format `{}`", file.format));
        }
        if file.version != MODEL_VERSION {
            return Err(format!("unsupported version {}", file.version));
        }
        Ok(file.model)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: TopicModel,
}

/// Which family of corpora to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScopeMode {
    Global,
    PerCategory,
    PerEntity,
}

impl std::str::FromStr for ScopeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "global" => Ok(ScopeMode::Global),
            "category" | "per-category" => Ok(ScopeMode::PerCategory),
            "entity" | "per-entity" => Ok(ScopeMode::PerEntity),
            other => Err(format!(
                "unknown mode `{other}` (expected global, category or entity)"
            )),
        }
    }
}

impl ScopeMode {
    pub fn scopes(&self, catalog: &EntityCatalog) -> Vec<Scope> {
        match self {
            ScopeMode::Global => vec![Scope::Global],
            ScopeMode::PerCategory => catalog
                .categories()
                .into_iter()
                .map(|c| Scope::Category(c.to_string()))
                .collect(),
            ScopeMode::PerEntity => catalog
                .entities()
                .iter()
                .map(|e| Scope::Entity(e.id.clone()))
                .collect(),
        }
    }

    /// The scope under this mode whose model covers `entity_id`.
    pub fn scope_for(&self, entity_id: &str, catalog: &EntityCatalog) -> Option<Scope> {
        let entity = catalog.get(entity_id)?;
        Some(match self {
            ScopeMode::Global => Scope::Global,
            ScopeMode::PerCategory => Scope::Category(entity.category.clone()),
            ScopeMode::PerEntity => Scope::Entity(entity.id.clone()),
        })
    }
}

/// Fits one model per scope of `mode`, skipping scopes with no
/// non-empty documents. Keys are scope labels.
pub fn build_scoped_models(
    mode: ScopeMode,
    range: DateRange,
    store: &dyn RecordStore,
    catalog: &EntityCatalog,
    preprocessor: &Preprocessor,
    params: &LdaParams,
) -> Result<BTreeMap<String, TopicModel>, TopicError> {
    params.validate()?;
    let mut corpora = Vec::new();
    for scope in mode.scopes(catalog) {
        let corpus = build_corpus(&scope, range, store, catalog, preprocessor)?;
        if corpus.is_empty() {
            tracing::warn!(scope = %scope, "no documents in range, skipping scope");
            continue;
        }
        corpora.push(corpus);
    }
    let fingerprint = preprocessor.config().fingerprint();
    corpora
        .par_iter()
        .map(|corpus| {
            let mut model = fit(corpus, params)?;
            model.date_range = Some(range);
            model.config_fingerprint = fingerprint.clone();
            Ok((model.scope.clone(), model))
        })
        .collect()
}

fn file_slug(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// File name keyed by scope, date range and parameter fingerprint.
pub fn model_file_name(model: &TopicModel) -> String {
    let range = model
        .date_range
        .map(|r| format!("{}_{}", r.from, r.to))
        .unwrap_or_else(|| "all".to_string());
    format!(
        "{}__{}__{}.model.json",
        file_slug(&model.scope),
        range,
        model.params_fingerprint()
    )
}

/// Writes a model into `dir`, returning its path.
pub fn save_model(dir: &Path, model: &TopicModel) -> Result<PathBuf, TopicError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| TopicError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let path = dir.join(model_file_name(model));
    fs::write(&path, model.to_bytes()).map_err(io(&path))?;
    Ok(path)
}

pub fn load_model(path: &Path) -> Result<TopicModel, TopicError> {
    let file = fs::File::open(path).map_err(|source| TopicError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    TopicModel::read(std::io::BufReader::new(file)).map_err(|message| TopicError::Format {
        path: path.to_path_buf(),
        message,
    })
}

/// Loads every model file in `dir`, keyed by scope label. When several
/// files share a scope, the one whose date range ends latest wins
/// (then latest start, then file name).
pub fn load_model_dir(dir: &Path) -> Result<BTreeMap<String, TopicModel>, TopicError> {
    let entries = fs::read_dir(dir).map_err(|source| TopicError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.to_string_lossy().ends_with(".model.json"))
        .collect();
    paths.sort();

    let mut models: BTreeMap<String, TopicModel> = BTreeMap::new();
    for path in paths {
        let model = load_model(&path)?;
        let rank = |m: &TopicModel| m.date_range.map(|r| (r.to, r.from));
        match models.get(&model.scope) {
            Some(existing) if rank(existing) > rank(&model) => {
                tracing::warn!(scope = %model.scope, path = %path.display(), "older model ignored");
            }
            _ => {
                models.insert(model.scope.clone(), model);
            }
        }
    }
    Ok(models)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::MetaDocument;
    use chrono::NaiveDate;

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2015, 7, d).unwrap()
    }

    fn doc(entity: &str, d: u32, terms: &[(&str, u32)]) -> MetaDocument {
        let term_counts: BTreeMap<String, u32> =
            terms.iter().map(|(t, n)| (t.to_string(), *n)).collect();
        MetaDocument {
            key: DayKey::new(entity, day(d)),
            total_tokens: term_counts.values().map(|&n| n as u64).sum(),
            term_counts,
            source_record_ids: vec![],
        }
    }

    fn params(topics: usize) -> LdaParams {
        LdaParams {
            topics,
            alpha: 0.5,
            beta: 0.01,
            iterations: 30,
            burn_in: 10,
            seed: 3,
        }
    }

    #[test]
    fn degenerate_model() {
        let corpus = Corpus::new(
            Scope::Entity("x".into()),
            vec![doc("x", 10, &[("golo", 5)])],
        );
        let model = fit(&corpus, &params(1)).unwrap();
        assert_eq!(model.phi, vec![vec![1.0]]);
        assert_eq!(model.theta, vec![vec![1.0]]);
        let top = model.top_words(0, 10).unwrap();
        assert_eq!(
            top.top_terms,
            vec![TermWeight {
                term: "golo".into(),
                weight: 1.0
            }]
        );
        let day_topics = model
            .topics_for_day(&DayKey::new("x", day(10)), 3, 5)
            .unwrap();
        assert_eq!(day_topics.len(), 1);
        assert_eq!(day_topics[0].weight, 1.0);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let corpus = Corpus::new(Scope::Global, vec![]);
        assert!(matches!(
            fit(&corpus, &params(2)),
            Err(TopicError::Lda(LdaError::EmptyCorpus))
        ));
    }

    fn small_model() -> TopicModel {
        let corpus = Corpus::new(
            Scope::Global,
            vec![
                doc("a", 10, &[("golo", 3), ("jogo", 2), ("bola", 1)]),
                doc("b", 10, &[("voto", 4), ("urna", 2)]),
                doc("a", 11, &[("golo", 1), ("voto", 1)]),
            ],
        );
        fit(&corpus, &params(3)).unwrap()
    }

    #[test]
    fn distributions_normalized_and_positive() {
        let model = small_model();
        assert_eq!(model.phi.len(), 3);
        assert_eq!(model.theta.len(), 3);
        for row in model.phi.iter().chain(&model.theta) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&p| p > 0.0));
        }
        assert!(model.phi.iter().all(|r| r.len() == 5));
        assert!(model.theta.iter().all(|r| r.len() == 3));
    }

    #[test]
    fn top_words_ordering_and_clamping() {
        let model = small_model();
        let s = model.top_words(1, 100).unwrap();
        assert_eq!(s.top_terms.len(), 5);
        for w in s.top_terms.windows(2) {
            assert!(
                w[0].weight > w[1].weight || (w[0].weight == w[1].weight && w[0].term < w[1].term)
            );
        }
        assert!(matches!(
            model.top_words(3, 1),
            Err(TopicError::TopicOutOfRange {
                topic: 3,
                topics: 3
            })
        ));
    }

    #[test]
    fn ties_broken_lexicographically() {
        let model = TopicModel {
            scope: "global".into(),
            date_range: None,
            params: params(2),
            config_fingerprint: String::new(),
            vocabulary: vec!["a".into(), "b".into(), "c".into()],
            phi: vec![vec![0.25, 0.5, 0.25], vec![0.2, 0.4, 0.4]],
            theta: vec![vec![0.5, 0.5]],
            doc_keys: vec![DayKey::new("x", day(1))],
        };
        let terms: Vec<_> = model
            .top_words(0, 3)
            .unwrap()
            .top_terms
            .into_iter()
            .map(|t| t.term)
            .collect();
        assert_eq!(terms, ["b", "a", "c"]);
        let day_topics = model
            .topics_for_day(&DayKey::new("x", day(1)), 5, 1)
            .unwrap();
        let ids: Vec<_> = day_topics.iter().map(|t| t.topic.topic_id).collect();
        assert_eq!(ids, [0, 1]);
    }

    #[test]
    fn unknown_document() {
        let model = small_model();
        assert!(matches!(
            model.topics_for_day(&DayKey::new("zzz", day(10)), 1, 1),
            Err(TopicError::UnknownDocument(_))
        ));
    }

    #[test]
    fn serialization_round_trip() {
        let mut model = small_model();
        model.date_range = Some(DateRange::new(day(10), day(11)).unwrap());
        let bytes = model.to_bytes();
        let back = TopicModel::read(bytes.as_slice()).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_bytes(), bytes);

        let dir = tempfile::tempdir().unwrap();
        let path = save_model(dir.path(), &model).unwrap();
        assert!(path
            .file_name()
            .unwrap()
            .to_string_lossy()
            .starts_with("global__2015-07-10_2015-07-11__"));
        let loaded = load_model_dir(dir.path()).unwrap();
        assert_eq!(loaded["global"], model);
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(TopicModel::read(r#"{"format":"other","version":1}"#.as_bytes()).is_err());
    }

    #[test]
    fn latest_range_wins_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let mut old = small_model();
        old.date_range = Some(DateRange::new(day(1), day(5)).unwrap());
        let mut new = small_model();
        new.date_range = Some(DateRange::new(day(1), day(11)).unwrap());
        save_model(dir.path(), &new).unwrap();
        save_model(dir.path(), &old).unwrap();
        let loaded = load_model_dir(dir.path()).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded["global"].date_range, new.date_range);
    }

    #[test]
    fn scope_mode_parsing() {
        assert_eq!("global".parse::<ScopeMode>().unwrap(), ScopeMode::Global);
        assert_eq!(
            "category".parse::<ScopeMode>().unwrap(),
            ScopeMode::PerCategory
        );
        assert_eq!(
            "per-entity".parse::<ScopeMode>().unwrap(),
            ScopeMode::PerEntity
        );
        assert!("weekly".parse::<ScopeMode>().is_err());
    }
}
