//! Five-rule text clean-up turning a raw record into terms for one entity.
//!
//! Rules, applied in order:
//! 1. discard texts shorter than `min_tweet_chars` Unicode scalar values;
//! 2. strip hyperlinks, replace non letter/digit characters with spaces,
//!    lowercase;
//! 3. drop the entity's own keywords;
//! 4. drop stopwords;
//! 5. drop tokens shorter than `min_token_chars` unless whitelisted.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::catalog::EntityCatalog;
use crate::store::TextRecord;
use crate::text;

const PT_STOPWORDS: &str = include_str!("../data/stopwords/pt.txt");
const EN_STOPWORDS: &str = include_str!("../data/stopwords/en.txt");
const WHITELIST: &str = include_str!("../data/stopwords/whitelist.txt");

const LINK_PREFIXES: [&str; 3] = ["http://", "https://", "www."];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("min_token_chars must be at least 1")]
    MinTokenChars,
    #[error("i/o error reading term list: {0}")]
    Io(#[from] std::io::Error),
}

/// Parses a term list: one term per line, `#` starts a comment.
pub fn read_term_list<R: BufRead>(source: R) -> Result<BTreeSet<String>, std::io::Error> {
    let mut terms = BTreeSet::new();
    for line in source.lines() {
        let line = line?;
        let term = line.split('#').next().unwrap_or_default();
        let term = text::fold(term);
        if !term.is_empty() {
            terms.insert(term);
        }
    }
    Ok(terms)
}

fn parse_bundled(list: &str) -> BTreeSet<String> {
    read_term_list(list.as_bytes()).expect("bundled list is valid UTF-8")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PreprocessConfig {
    min_tweet_chars: usize,
    min_token_chars: usize,
    stopwords: BTreeSet<String>,
    whitelist: BTreeSet<String>,
}

impl Default for PreprocessConfig {
    /// Thresholds 40/3 with the bundled Portuguese and English stopwords
    /// and the bundled whitelist.
    fn default() -> Self {
        let mut stopwords = parse_bundled(PT_STOPWORDS);
        stopwords.extend(parse_bundled(EN_STOPWORDS));
        Self {
            min_tweet_chars: 40,
            min_token_chars: 3,
            stopwords,
            whitelist: parse_bundled(WHITELIST),
        }
    }
}

impl PreprocessConfig {
    pub fn new<S, W>(
        min_tweet_chars: usize,
        min_token_chars: usize,
        stopwords: S,
        whitelist: W,
    ) -> Result<Self, ConfigError>
    where
        S: IntoIterator,
        S::Item: AsRef<str>,
        W: IntoIterator,
        W::Item: AsRef<str>,
    {
        if min_token_chars == 0 {
            return Err(ConfigError::MinTokenChars);
        }
        let fold_all = |it: &mut dyn Iterator<Item = String>| -> BTreeSet<String> {
            it.filter(|t| !t.is_empty()).collect()
        };
        Ok(Self {
            min_tweet_chars,
            min_token_chars,
            stopwords: fold_all(&mut stopwords.into_iter().map(|s| text::fold(s.as_ref()))),
            whitelist: fold_all(&mut whitelist.into_iter().map(|s| text::fold(s.as_ref()))),
        })
    }

    pub fn min_tweet_chars(&self) -> usize {
        self.min_tweet_chars
    }

    pub fn min_token_chars(&self) -> usize {
        self.min_token_chars
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn whitelist(&self) -> &BTreeSet<String> {
        &self.whitelist
    }

    pub fn with_min_tweet_chars(mut self, n: usize) -> Self {
        self.min_tweet_chars = n;
        self
    }

    /// Stable hex digest identifying this configuration.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&canonical)[..8])
    }

    fn keeps(&self, token: &str) -> bool {
        !self.stopwords.contains(token)
            && (self.whitelist.contains(token) || token.chars().count() >= self.min_token_chars)
    }
}

/// Surviving terms of one record, in text order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenList(pub Vec<String>);

impl TokenList {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.0
    }

    pub fn contains(&self, term: &str) -> bool {
        self.0.iter().any(|t| t == term)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Preprocessed {
    Tokens(TokenList),
    /// The raw text was shorter than the minimum length.
    Discarded,
}

impl Preprocessed {
    pub fn tokens(&self) -> Option<&TokenList> {
        match self {
            Preprocessed::Tokens(t) => Some(t),
            Preprocessed::Discarded => None,
        }
    }
}

fn starts_with_link(s: &str) -> bool {
    LINK_PREFIXES.iter().any(|p| {
        s.get(..p.len())
            .is_some_and(|head| head.eq_ignore_ascii_case(p))
    })
}

/// Replaces every hyperlink (a link prefix up to the next whitespace)
/// with a single space.
pub fn strip_links(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(c) = rest.chars().next() {
        if starts_with_link(rest) {
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            out.push(' ');
            rest = &rest[end..];
        } else {
            out.push(c);
            rest = &rest[c.len_utf8()..];
        }
    }
    out
}

fn remove_sequences(tokens: Vec<String>, sequences: &[Vec<String>]) -> Vec<String> {
    if sequences.is_empty() {
        return tokens;
    }
    let mut kept = Vec::with_capacity(tokens.len());
    let mut i = 0;
    'scan: while i < tokens.len() {
        for seq in sequences {
            if tokens[i..].starts_with(seq) {
                i += seq.len();
                continue 'scan;
            }
        }
        kept.push(tokens[i].clone());
        i += 1;
    }
    kept
}

fn apply_rules(raw: &str, keywords: &[Vec<String>], config: &PreprocessConfig) -> Preprocessed {
    if raw.chars().count() < config.min_tweet_chars {
        return Preprocessed::Discarded;
    }
    let tokens = text::tokens(&strip_links(raw));
    let tokens = remove_sequences(tokens, keywords);
    let tokens = tokens.into_iter().filter(|t| config.keeps(t)).collect();
    Preprocessed::Tokens(TokenList(tokens))
}

/// Applies the five rules to `record` on behalf of `entity_id`.
pub fn preprocess(
    record: &TextRecord,
    entity_id: &str,
    catalog: &EntityCatalog,
    config: &PreprocessConfig,
) -> Preprocessed {
    debug_assert!(record.entity_ids.contains(entity_id));
    apply_rules(&record.text, &catalog.keyword_sequences(entity_id), config)
}

/// A configuration bound to a catalog, with each entity's keyword token
/// sequences precomputed.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    config: PreprocessConfig,
    keywords: HashMap<String, Vec<Vec<String>>>,
}

impl Preprocessor {
    pub fn new(catalog: &EntityCatalog, config: PreprocessConfig) -> Self {
        let keywords = catalog
            .entities()
            .iter()
            .map(|e| (e.id.clone(), catalog.keyword_sequences(&e.id)))
            .collect();
        Self { config, keywords }
    }

    pub fn config(&self) -> &PreprocessConfig {
        &self.config
    }

    pub fn run(&self, record: &TextRecord, entity_id: &str) -> Preprocessed {
        let keywords = self.keywords.get(entity_id).map_or(&[][..], Vec::as_slice);
        apply_rules(&record.text, keywords, &self.config)
    }
}
