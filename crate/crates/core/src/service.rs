//! Read-only query layer over ingested records and fitted models.
//!
//! Every endpoint is a method on [`Snapshot`] returning an [`ApiResponse`]
//! holding the exact body bytes; the HTTP router and the offline `query`
//! command both go through these methods, so their output is identical.
//!
//! Routes (version 1, all under `/api`):
//!
//! | path | query |
//! |------|-------|
//! | `/api/entities` | |
//! | `/api/entities/{id}/bubbles` | `date`, `limit` (30) |
//! | `/api/entities/{id}/trend` | `from`, `to` (stored range) |
//! | `/api/entities/{id}/topics` | `date`, `mode` (global), `n_topics` (3), `n_words` (10) |
//! | `/api/entities/{id}/tweets` | `date`, `term`, `limit` (20) |

use std::collections::{BTreeMap, HashMap};
use std::future::Future;
use std::path::Path;
use std::sync::{Arc, RwLock};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use chrono::{DateTime, NaiveDate, Utc};
use serde::Serialize;
use thiserror::Error;

use crate::aggregate::MetaDocumentCache;
use crate::catalog::{Entity, EntityCatalog};
use crate::ingest::daily_counts;
use crate::preprocess::{PreprocessConfig, Preprocessed, Preprocessor};
use crate::sentiment::{bubbles, load_lexicon, Bubble, LexiconError, Polarity, SentimentLexicon};
use crate::store::{DayKey, FileStore, RecordStore, StoreError};
use crate::text;
use crate::topics::{load_model_dir, ScopeMode, TermWeight, TopicError, TopicModel};

pub const API_VERSION: u32 = 1;
pub const DEFAULT_BUBBLE_LIMIT: usize = 30;
pub const DEFAULT_TWEET_LIMIT: usize = 20;
pub const DEFAULT_TOPICS: usize = 3;
pub const DEFAULT_TOPIC_WORDS: usize = 10;

pub type Params = BTreeMap<String, String>;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Topics(#[from] TopicError),
    #[error("lexicon {path}: {source}")]
    Lexicon {
        path: String,
        #[source]
        source: LexiconError,
    },
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A finished response: status code plus JSON body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiResponse {
    pub status: u16,
    pub body: String,
}

impl ApiResponse {
    fn ok<T: Serialize>(value: &T) -> Self {
        Self {
            status: 200,
            body: serde_json::to_string(value).expect("response serializes"),
        }
    }

    fn error(status: u16, code: &str, message: impl Into<String>) -> Self {
        Self::ok(&ErrorBody {
            code: code.to_string(),
            message: message.into(),
        })
        .with_status(status)
    }

    fn with_status(mut self, status: u16) -> Self {
        self.status = status;
        self
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::error(400, "bad_request", message)
    }

    pub fn is_success(&self) -> bool {
        self.status == 200
    }
}

impl IntoResponse for ApiResponse {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (
            status,
            [(header::CONTENT_TYPE, "application/json")],
            self.body,
        )
            .into_response()
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    code: String,
    message: String,
}

#[derive(Debug, Serialize)]
struct EntityView<'a> {
    id: &'a str,
    canonical_name: &'a str,
    category: &'a str,
}

#[derive(Debug, Serialize)]
struct TopicView {
    topic_id: usize,
    topic_terms: Vec<TermWeight>,
    weight: f64,
}

/// An occurrence of a bubble term in a raw text, in bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Span {
    pub offset: usize,
    pub length: usize,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HighlightedText {
    pub record_id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    pub spans: Vec<Span>,
}

/// Marks every whole-token, case-insensitive occurrence of a term of
/// `terms` in `raw`.
pub fn highlight_spans(raw: &str, terms: &HashMap<String, Polarity>) -> Vec<Span> {
    text::token_spans(raw)
        .into_iter()
        .filter_map(|(start, end)| {
            let folded = raw[start..end].to_lowercase();
            terms.get(&folded).map(|&polarity| Span {
                offset: start,
                length: end - start,
                polarity,
            })
        })
        .collect()
}

type Reply<T> = Result<T, ApiResponse>;

fn parse_date(params: &Params, name: &str) -> Reply<Option<NaiveDate>> {
    params
        .get(name)
        .map(|raw| {
            NaiveDate::parse_from_str(raw, "%Y-%m-%d").map_err(|_| {
                ApiResponse::bad_request(format!(
                    "`{name}` must be an ISO date (YYYY-MM-DD), got `{raw}`"
                ))
            })
        })
        .transpose()
}

fn require_date(params: &Params, name: &str) -> Reply<NaiveDate> {
    parse_date(params, name)?
        .ok_or_else(|| ApiResponse::bad_request(format!("missing required parameter `{name}`")))
}

fn parse_count(params: &Params, name: &str, default: usize) -> Reply<usize> {
    match params.get(name) {
        None => Ok(default),
        Some(raw) => match raw.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(ApiResponse::bad_request(format!(
                "`{name}` must be a positive integer, got `{raw}`"
            ))),
        },
    }
}

fn merge(reply: Reply<ApiResponse>) -> ApiResponse {
    reply.unwrap_or_else(|e| e)
}

/// Immutable view of every artifact the endpoints read.
pub struct Snapshot {
    catalog: EntityCatalog,
    store: Arc<dyn RecordStore>,
    preprocessor: Preprocessor,
    lexicon: SentimentLexicon,
    models: BTreeMap<String, TopicModel>,
    cache: MetaDocumentCache,
}

impl Snapshot {
    pub fn new(
        catalog: EntityCatalog,
        store: Arc<dyn RecordStore>,
        config: PreprocessConfig,
        lexicon: SentimentLexicon,
        models: BTreeMap<String, TopicModel>,
    ) -> Self {
        let preprocessor = Preprocessor::new(&catalog, config);
        let fingerprint = preprocessor.config().fingerprint();
        for model in models.values() {
            if !model.config_fingerprint.is_empty() && model.config_fingerprint != fingerprint {
                tracing::warn!(scope = %model.scope, "model was built with a different preprocessing configuration");
            }
        }
        Self {
            catalog,
            store,
            preprocessor,
            lexicon,
            models,
            cache: MetaDocumentCache::new(),
        }
    }

    /// Opens a file store, its catalog, every model under `model_dir` and
    /// the lexicon.
    pub fn load(
        store_dir: &Path,
        model_dir: &Path,
        lexicon_path: &Path,
        config: PreprocessConfig,
    ) -> Result<Self, ServiceError> {
        let lexicon_file =
            std::fs::File::open(lexicon_path).map_err(|source| ServiceError::Io {
                path: lexicon_path.display().to_string(),
                source,
            })?;
        let lexicon = load_lexicon(std::io::BufReader::new(lexicon_file)).map_err(|source| {
            ServiceError::Lexicon {
                path: lexicon_path.display().to_string(),
                source,
            }
        })?;
        if !store_dir.is_dir() {
            return Err(ServiceError::Io {
                path: store_dir.display().to_string(),
                source: std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    "store directory not found",
                ),
            });
        }
        let store = FileStore::open(store_dir)?;
        let catalog = store.load_catalog()?;
        let models = if model_dir.exists() {
            load_model_dir(model_dir)?
        } else {
            BTreeMap::new()
        };
        Ok(Self::new(catalog, Arc::new(store), config, lexicon, models))
    }

    pub fn catalog(&self) -> &EntityCatalog {
        &self.catalog
    }

    pub fn models(&self) -> &BTreeMap<String, TopicModel> {
        &self.models
    }

    fn entity(&self, id: &str) -> Reply<&Entity> {
        self.catalog
            .get(id)
            .ok_or_else(|| ApiResponse::error(404, "not_found", format!("unknown entity `{id}`")))
    }

    fn day_bubbles(&self, key: &DayKey, limit: usize) -> Vec<Bubble> {
        let doc = self
            .cache
            .get_or_build(key, self.store.as_ref(), &self.preprocessor);
        bubbles(&doc, limit, &self.lexicon)
    }

    /// `GET /api/entities`
    pub fn entities(&self) -> ApiResponse {
        let mut list: Vec<EntityView> = self
            .catalog
            .entities()
            .iter()
            .map(|e| EntityView {
                id: &e.id,
                canonical_name: &e.canonical_name,
                category: &e.category,
            })
            .collect();
        list.sort_by(|a, b| a.id.cmp(b.id));
        ApiResponse::ok(&list)
    }

    /// `GET /api/entities/{id}/bubbles`
    pub fn bubbles(&self, id: &str, params: &Params) -> ApiResponse {
        merge((|| {
            let entity = self.entity(id)?;
            let date = require_date(params, "date")?;
            let limit = parse_count(params, "limit", DEFAULT_BUBBLE_LIMIT)?;
            Ok(ApiResponse::ok(
                &self.day_bubbles(&DayKey::new(&entity.id, date), limit),
            ))
        })())
    }

    /// `GET /api/entities/{id}/trend`
    pub fn trend(&self, id: &str, params: &Params) -> ApiResponse {
        merge((|| {
            let entity = self.entity(id)?;
            let bounds = self.store.date_bounds();
            let from = parse_date(params, "from")?.or(bounds.map(|b| b.0));
            let to = parse_date(params, "to")?.or(bounds.map(|b| b.1));
            let (Some(from), Some(to)) = (from, to) else {
                return Ok(ApiResponse::ok(&Vec::<()>::new()));
            };
            match daily_counts(&entity.id, from, to, self.store.as_ref()) {
                Ok(points) => Ok(ApiResponse::ok(&points)),
                Err(e) => Err(ApiResponse::bad_request(e.to_string())),
            }
        })())
    }

    /// `GET /api/entities/{id}/topics`
    pub fn topics(&self, id: &str, params: &Params) -> ApiResponse {
        merge((|| {
            let entity = self.entity(id)?;
            let date = require_date(params, "date")?;
            let mode: ScopeMode = params
                .get("mode")
                .map(String::as_str)
                .unwrap_or("global")
                .parse()
                .map_err(ApiResponse::bad_request)?;
            let n_topics = parse_count(params, "n_topics", DEFAULT_TOPICS)?;
            let n_words = parse_count(params, "n_words", DEFAULT_TOPIC_WORDS)?;
            let scope = mode
                .scope_for(&entity.id, &self.catalog)
                .expect("entity exists")
                .label();
            let model = self.models.get(&scope).ok_or_else(|| {
                ApiResponse::error(
                    409,
                    "model_not_built",
                    format!("no topic model has been built for scope `{scope}`"),
                )
            })?;
            let key = DayKey::new(&entity.id, date);
            if model.document_index(&key).is_none() {
                return Ok(ApiResponse::ok(&Vec::<()>::new()));
            }
            let topics: Vec<TopicView> = model
                .topics_for_day(&key, n_topics, n_words)
                .expect("document present")
                .into_iter()
                .map(|t| TopicView {
                    topic_id: t.topic.topic_id,
                    topic_terms: t.topic.top_terms,
                    weight: t.weight,
                })
                .collect();
            Ok(ApiResponse::ok(&topics))
        })())
    }

    /// `GET /api/entities/{id}/tweets`
    ///
    /// With `term`, keeps records whose cleaned tokens contain it. The
    /// `limit` most recent matches are returned in timestamp order, each
    /// with spans for every bubble term of the day.
    pub fn tweets(&self, id: &str, params: &Params) -> ApiResponse {
        merge((|| {
            let entity = self.entity(id)?;
            let date = require_date(params, "date")?;
            let limit = parse_count(params, "limit", DEFAULT_TWEET_LIMIT)?;
            let term = params
                .get("term")
                .map(|t| text::fold(t))
                .filter(|t| !t.is_empty());
            let key = DayKey::new(&entity.id, date);

            let highlight: HashMap<String, Polarity> = self
                .day_bubbles(&key, DEFAULT_BUBBLE_LIMIT)
                .into_iter()
                .map(|b| (b.term, b.polarity))
                .collect();

            let matching: Vec<_> = self
                .store
                .records_for(&key)
                .into_iter()
                .filter(|r| match &term {
                    None => true,
                    Some(t) => matches!(
                        self.preprocessor.run(r, &entity.id),
                        Preprocessed::Tokens(tokens) if tokens.contains(t)
                    ),
                })
                .collect();
            let skip = matching.len().saturating_sub(limit);
            let texts: Vec<HighlightedText> = matching
                .into_iter()
                .skip(skip)
                .map(|r| HighlightedText {
                    spans: highlight_spans(&r.text, &highlight),
                    record_id: r.record_id,
                    timestamp: r.timestamp,
                    text: r.text,
                })
                .collect();
            Ok(ApiResponse::ok(&texts))
        })())
    }
}

/// Holds the current snapshot; reloads swap it atomically while in-flight
/// requests keep the one they started with.
pub struct QueryService {
    current: RwLock<Arc<Snapshot>>,
}

impl QueryService {
    pub fn new(snapshot: Snapshot) -> Self {
        Self {
            current: RwLock::new(Arc::new(snapshot)),
        }
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.current.read().unwrap())
    }

    pub fn swap(&self, snapshot: Snapshot) {
        *self.current.write().unwrap() = Arc::new(snapshot);
    }
}

type Shared = Arc<QueryService>;

async fn entities_route(State(svc): State<Shared>) -> ApiResponse {
    svc.snapshot().entities()
}

async fn bubbles_route(
    State(svc): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Query(params): Query<Params>,
) -> ApiResponse {
    svc.snapshot().bubbles(&id, &params)
}

async fn trend_route(
    State(svc): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Query(params): Query<Params>,
) -> ApiResponse {
    svc.snapshot().trend(&id, &params)
}

async fn topics_route(
    State(svc): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Query(params): Query<Params>,
) -> ApiResponse {
    svc.snapshot().topics(&id, &params)
}

async fn tweets_route(
    State(svc): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Query(params): Query<Params>,
) -> ApiResponse {
    svc.snapshot().tweets(&id, &params)
}

async fn not_found() -> ApiResponse {
    ApiResponse::error(404, "not_found", "no such endpoint")
}

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/api/entities", get(entities_route))
        .route("/api/entities/{id}/bubbles", get(bubbles_route))
        .route("/api/entities/{id}/trend", get(trend_route))
        .route("/api/entities/{id}/topics", get(topics_route))
        .route("/api/entities/{id}/tweets", get(tweets_route))
        .fallback(not_found)
        .with_state(service)
}

/// Serves the API on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    service: Shared,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(service))
        .with_graceful_shutdown(shutdown)
        .await
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_are_whole_tokens() {
        let terms = HashMap::from([
            ("golo".to_string(), Polarity::Neutral),
            ("ótimo".to_string(), Polarity::Positive),
        ]);
        let raw = "GOLO! golos Ótimo golo";
        let spans = highlight_spans(raw, &terms);
        assert_eq!(
            spans,
            vec![
                Span {
                    offset: 0,
                    length: 4,
                    polarity: Polarity::Neutral
                },
                Span {
                    offset: 12,
                    length: 6,
                    polarity: Polarity::Positive
                },
                Span {
                    offset: 19,
                    length: 4,
                    polarity: Polarity::Neutral
                },
            ]
        );
        for s in &spans {
            assert!(terms.contains_key(&raw[s.offset..s.offset + s.length].to_lowercase()));
        }
    }

    #[test]
    fn param_parsing() {
        let p: Params = [("date".to_string(), "2015-7-1x".to_string())].into();
        assert_eq!(parse_date(&p, "date").unwrap_err().status, 400);
        assert_eq!(
            require_date(&Params::new(), "date").unwrap_err().status,
            400
        );
        let p: Params = [("limit".to_string(), "0".to_string())].into();
        assert_eq!(parse_count(&p, "limit", 5).unwrap_err().status, 400);
        assert_eq!(parse_count(&Params::new(), "limit", 5).unwrap(), 5);
    }
}
