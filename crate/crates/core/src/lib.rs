//! Entity-centric daily topic and sentiment analytics over short texts.
//!
//! Texts are matched to entities by keyword, grouped per entity and UTC
//! day into meta-documents, cleaned, and then fed to a collapsed Gibbs
//! LDA sampler and a word-polarity lexicon. [`service`] exposes the
//! results as JSON over HTTP.

pub mod aggregate;
pub mod catalog;
pub mod ingest;
pub mod lda;
pub mod preprocess;
pub mod sentiment;
pub mod service;
pub mod store;
pub mod text;
pub mod topics;

pub use aggregate::{build_corpus, build_meta_document, Corpus, DateRange, MetaDocument, Scope};
pub use catalog::{load_catalog, Entity, EntityCatalog};
pub use ingest::{daily_counts, ingest_dump, DailyCount, IngestReport};
pub use lda::{GibbsSampler, LdaParams};
pub use preprocess::{preprocess, PreprocessConfig, Preprocessed, Preprocessor, TokenList};
pub use sentiment::{bubbles, load_lexicon, Bubble, Polarity, SentimentLexicon};
pub use store::{DayKey, FileStore, MemoryStore, RecordStore, TextRecord};
pub use topics::{build_scoped_models, fit, ScopeMode, TopicModel, TopicSummary};
