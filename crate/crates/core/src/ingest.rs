//! Dump ingestion and per-day trend counts.

use std::io::BufRead;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::EntityCatalog;
use crate::store::{DayKey, RecordStore, StoreError, TextRecord};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error reading dump: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid date range: {from} is after {to}")]
pub struct InvalidRange {
    pub from: NaiveDate,
    pub to: NaiveDate,
}

/// Outcome of one dump replay.
///
/// `read` counts non-blank lines, `matched` well-formed records naming at
/// least one entity, `stored` newly inserted records, and `skipped`
/// malformed lines plus duplicate record ids.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub read: usize,
    pub matched: usize,
    pub stored: usize,
    pub skipped: usize,
}

impl std::ops::AddAssign for IngestReport {
    fn add_assign(&mut self, rhs: Self) {
        self.read += rhs.read;
        self.matched += rhs.matched;
        self.stored += rhs.stored;
        self.skipped += rhs.skipped;
    }
}

/// One line of a dump file.
#[derive(Debug, Deserialize)]
struct DumpLine {
    id: String,
    timestamp: String,
    text: String,
}

fn parse_line(bytes: &[u8]) -> Option<(String, DateTime<Utc>, String)> {
    let line: DumpLine = serde_json::from_slice(bytes).ok()?;
    if line.id.is_empty() {
        return None;
    }
    let ts = DateTime::parse_from_rfc3339(&line.timestamp).ok()?;
    Some((line.id, ts.with_timezone(&Utc), line.text))
}

/// Replays a newline-delimited dump into `store`, tagging each record with
/// the entities it mentions. Malformed lines are counted and skipped.
pub fn ingest_dump<R: BufRead>(
    mut source: R,
    catalog: &EntityCatalog,
    store: &dyn RecordStore,
) -> Result<IngestReport, IngestError> {
    let mut report = IngestReport::default();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if source.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        if buf.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        report.read += 1;
        let Some((record_id, timestamp, text)) = parse_line(&buf) else {
            tracing::debug!(line = report.read, "skipping malformed dump line");
            report.skipped += 1;
            continue;
        };
        let entity_ids = catalog.match_entities(&text);
        if entity_ids.is_empty() {
            continue;
        }
        report.matched += 1;
        let record = TextRecord {
            record_id,
            timestamp,
            text,
            entity_ids,
        };
        if store.insert(record)? {
            report.stored += 1;
        } else {
            report.skipped += 1;
        }
    }
    Ok(report)
}

/// One point of an entity's trendline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyCount {
    pub date: NaiveDate,
    pub count: usize,
}

/// Record counts for every date in `[from, to]`, zero-filled.
pub fn daily_counts(
    entity_id: &str,
    from: NaiveDate,
    to: NaiveDate,
    store: &dyn RecordStore,
) -> Result<Vec<DailyCount>, InvalidRange> {
    if from > to {
        return Err(InvalidRange { from, to });
    }
    Ok(from
        .iter_days()
        .take_while(|d| *d <= to)
        .map(|date| DailyCount {
            date,
            count: store.count_for(&DayKey::new(entity_id, date)),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Entity;
    use crate::store::MemoryStore;
    use std::collections::BTreeSet;

    fn catalog() -> EntityCatalog {
        EntityCatalog::from_entities(vec![
            Entity {
                id: "cristiano-ronaldo".into(),
                canonical_name: "Cristiano Ronaldo".into(),
                keywords: vec!["Ronaldo".into(), "CR7".into()],
                category: "sports".into(),
            },
            Entity {
                id: "sl-benfica".into(),
                canonical_name: "Sport Lisboa e Benfica".into(),
                keywords: vec!["Benfica".into()],
                category: "sports".into(),
            },
        ])
        .unwrap()
    }

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2015, 7, d).unwrap()
    }

    const THREE_LINES: &str = concat!(
        r#"{"id":"1","timestamp":"2015-07-10T10:00:00Z","text":"Grande golo do CR7 esta noite"}"#,
        "\n",
        r#"{"id":"2","timestamp":"2015-07-10T11:00:00Z","text":"O Benfica joga amanha"}"#,
        "\n",
        r#"{"id":"3","timestamp":"2015-07-10T12:00:00Z","text":"bom dia a todos"}"#,
        "\n",
    );

    #[test]
    fn three_record_fixture() {
        let store = MemoryStore::new();
        let report = ingest_dump(THREE_LINES.as_bytes(), &catalog(), &store).unwrap();
        assert_eq!(
            report,
            IngestReport {
                read: 3,
                matched: 2,
                stored: 2,
                skipped: 0
            }
        );
        let cr7 = store.records_for(&DayKey::new("cristiano-ronaldo", day(10)));
        let slb = store.records_for(&DayKey::new("sl-benfica", day(10)));
        assert_eq!(cr7.len(), 1);
        assert_eq!(cr7[0].record_id, "1");
        assert_eq!(slb.len(), 1);
        assert_eq!(slb[0].record_id, "2");
        assert!(!store.contains("3"));
    }

    #[test]
    fn empty_stream() {
        let store = MemoryStore::new();
        let report = ingest_dump("".as_bytes(), &catalog(), &store).unwrap();
        assert_eq!(report, IngestReport::default());
    }

    #[test]
    fn shared_record_lands_under_both_keys() {
        let store = MemoryStore::new();
        let dump =
            r#"{"id":"x","timestamp":"2015-07-10T20:00:00Z","text":"O Ronaldo marcou ao Benfica"}"#;
        let report = ingest_dump(dump.as_bytes(), &catalog(), &store).unwrap();
        assert_eq!(report.stored, 1);
        assert_eq!(store.len(), 1);
        for id in ["cristiano-ronaldo", "sl-benfica"] {
            let recs = store.records_for(&DayKey::new(id, day(10)));
            assert_eq!(recs.len(), 1);
            assert_eq!(
                recs[0].entity_ids,
                BTreeSet::from(["cristiano-ronaldo".to_string(), "sl-benfica".to_string()])
            );
        }
    }

    #[test]
    fn malformed_lines_and_duplicates_are_skipped() {
        let store = MemoryStore::new();
        let dump = [
            r#"{"id":"1","timestamp":"2015-07-10T10:00:00Z","text":"CR7"}"#,
            "not json at all",
            r#"{"id":"2","timestamp":"yesterday","text":"CR7"}"#,
            r#"{"id":"1","timestamp":"2015-07-10T10:00:00Z","text":"CR7 again"}"#,
            "",
            r#"{"id":"3","text":"CR7"}"#,
        ]
        .join("\n");
        let report = ingest_dump(dump.as_bytes(), &catalog(), &store).unwrap();
        assert_eq!(
            report,
            IngestReport {
                read: 5,
                matched: 2,
                stored: 1,
                skipped: 4
            }
        );
    }

    #[test]
    fn invalid_utf8_line_is_skipped() {
        let store = MemoryStore::new();
        let mut dump = b"\xff\xfe garbage\n".to_vec();
        dump.extend_from_slice(br#"{"id":"1","timestamp":"2015-07-10T10:00:00Z","text":"CR7"}"#);
        let report = ingest_dump(dump.as_slice(), &catalog(), &store).unwrap();
        assert_eq!(report.read, 2);
        assert_eq!(report.skipped, 1);
        assert_eq!(report.stored, 1);
    }

    #[test]
    fn replay_is_idempotent() {
        let store = MemoryStore::new();
        ingest_dump(THREE_LINES.as_bytes(), &catalog(), &store).unwrap();
        let before: Vec<_> = store.records_for(&DayKey::new("cristiano-ronaldo", day(10)));
        let again = ingest_dump(THREE_LINES.as_bytes(), &catalog(), &store).unwrap();
        assert_eq!(again.stored, 0);
        assert_eq!(again.skipped, 2);
        assert_eq!(store.len(), 2);
        assert_eq!(
            store.records_for(&DayKey::new("cristiano-ronaldo", day(10))),
            before
        );
    }

    #[test]
    fn daily_counts_zero_fill() {
        let store = MemoryStore::new();
        let mut dump = String::new();
        for i in 0..5 {
            dump.push_str(&format!(
                "{{\"id\":\"r{i}\",\"timestamp\":\"2015-07-11T0{i}:00:00Z\",\"text\":\"CR7 {i}\"}}\n"
            ));
        }
        let report = ingest_dump(dump.as_bytes(), &catalog(), &store).unwrap();
        let counts = daily_counts("cristiano-ronaldo", day(10), day(12), &store).unwrap();
        let pairs: Vec<_> = counts.iter().map(|c| (c.date, c.count)).collect();
        assert_eq!(pairs, vec![(day(10), 0), (day(11), 5), (day(12), 0)]);
        assert_eq!(counts.iter().map(|c| c.count).sum::<usize>(), report.stored);
    }

    #[test]
    fn single_empty_day() {
        let store = MemoryStore::new();
        let counts = daily_counts("x", day(10), day(10), &store).unwrap();
        assert_eq!(
            counts,
            vec![DailyCount {
                date: day(10),
                count: 0
            }]
        );
    }

    #[test]
    fn reversed_range_is_rejected() {
        let store = MemoryStore::new();
        assert_eq!(
            daily_counts("x", day(12), day(10), &store),
            Err(InvalidRange {
                from: day(12),
                to: day(10)
            })
        );
    }
}
