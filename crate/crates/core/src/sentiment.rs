//! Word-level polarity lexicon and the per-day bubble payload.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::MetaDocument;
use crate::text;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexiconError {
    #[error("lexicon line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("lexicon line {line}: polarity {value} is not -1, 0 or 1")]
    Polarity { line: usize, value: i64 },
    #[error("lexicon line {line}: `{term}` already has polarity {previous}")]
    Conflict {
        line: usize,
        term: String,
        previous: i8,
    },
    #[error("i/o error reading lexicon: {0}")]
    Io(String),
}

/// Sentiment of a single word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Polarity {
    Negative,
    Neutral,
    Positive,
}

impl Polarity {
    pub fn value(self) -> i8 {
        match self {
            Polarity::Negative => -1,
            Polarity::Neutral => 0,
            Polarity::Positive => 1,
        }
    }
}

impl From<Polarity> for i8 {
    fn from(p: Polarity) -> i8 {
        p.value()
    }
}

impl TryFrom<i8> for Polarity {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            -1 => Ok(Polarity::Negative),
            0 => Ok(Polarity::Neutral),
            1 => Ok(Polarity::Positive),
            other => Err(format!("polarity {other} is not -1, 0 or 1")),
        }
    }
}

/// Case-folded term -> polarity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SentimentLexicon {
    entries: HashMap<String, Polarity>,
}

impl SentimentLexicon {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Polarity of `term`; neutral when absent.
    pub fn polarity(&self, term: &str) -> Polarity {
        if let Some(p) = self.entries.get(term) {
            return *p;
        }
        self.entries
            .get(&text::fold(term))
            .copied()
            .unwrap_or(Polarity::Neutral)
    }

    /// Writes entries sorted by term in the lexicon file format.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let sorted: BTreeMap<_, _> = self.entries.iter().collect();
        for (term, p) in sorted {
            writeln!(out, "{term}\t{}", p.value())?;
        }
        Ok(())
    }
}

impl FromIterator<(String, Polarity)> for SentimentLexicon {
    fn from_iter<I: IntoIterator<Item = (String, Polarity)>>(iter: I) -> Self {
        Self {
            entries: iter.into_iter().map(|(t, p)| (text::fold(&t), p)).collect(),
        }
    }
}

/// Reads a lexicon: one `term<TAB>polarity` per line, `#` comment lines
/// and blank lines ignored.
pub fn load_lexicon<R: BufRead>(source: R) -> Result<SentimentLexicon, LexiconError> {
    let mut entries: HashMap<String, Polarity> = HashMap::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| LexiconError::Io(e.to_string()))?;
        let content = line.trim_end_matches('\r');
        if content.trim().is_empty() || content.trim_start().starts_with('#') {
            continue;
        }
        let parse_err = |message: &str| LexiconError::Parse {
            line: line_no,
            message: message.to_string(),
        };
        let mut fields = content.split('\t');
        let (Some(term), Some(value), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err("expected `term<TAB>polarity`"));
        };
        let term = text::fold(term);
        if term.is_empty() {
            return Err(parse_err("empty term"));
        }
        let value: i64 = value
            .trim()
            .parse()
            .map_err(|_| parse_err("polarity is not an integer"))?;
        let polarity = i8::try_from(value)
            .ok()
            .and_then(|v| Polarity::try_from(v).ok())
            .ok_or(LexiconError::Polarity {
                line: line_no,
                value,
            })?;
        match entries.get(&term) {
            Some(&previous) if previous != polarity => {
                return Err(LexiconError::Conflict {
                    line: line_no,
                    term,
                    previous: previous.value(),
                });
            }
            Some(_) => {}
            None => {
                entries.insert(term, polarity);
            }
        }
    }
    Ok(SentimentLexicon { entries })
}

/// A term rendered as a circle: size from frequency, color from polarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub term: String,
    pub frequency: u32,
    pub polarity: Polarity,
    /// frequency divided by the day's maximum frequency
    pub scale: f64,
}

/// The `limit` most frequent terms of a meta-document, ordered by
/// frequency descending then term ascending.
pub fn bubbles(doc: &MetaDocument, limit: usize, lexicon: &SentimentLexicon) -> Vec<Bubble> {
    let Some(max) = doc.term_counts.values().copied().max() else {
        return Vec::new();
    };
    let mut terms: Vec<(&String, u32)> = doc.term_counts.iter().map(|(t, &n)| (t, n)).collect();
    terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    terms
        .into_iter()
        .take(limit)
        .map(|(term, frequency)| Bubble {
            term: term.clone(),
            frequency,
            polarity: lexicon.polarity(term),
            scale: frequency as f64 / max as f64,
        })
        .collect()
}
