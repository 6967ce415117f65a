#![allow(dead_code)]

use std::fs;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use sentibubbles::aggregate::DateRange;
use sentibubbles::catalog::load_catalog;
use sentibubbles::ingest::ingest_dump;
use sentibubbles::lda::LdaParams;
use sentibubbles::preprocess::{PreprocessConfig, Preprocessor};
use sentibubbles::store::FileStore;
use sentibubbles::topics::{build_scoped_models, save_model, ScopeMode};
use tempfile::TempDir;

pub mod golden;
pub mod oracle;

pub const CATALOG: &str = r#"{"entities": [
  {"id": "cristiano-ronaldo", "canonical_name": "Cristiano Ronaldo", "keywords": ["Ronaldo", "CR7"], "category": "sports"},
  {"id": "sl-benfica", "canonical_name": "Sport Lisboa e Benfica", "keywords": ["Benfica"], "category": "sports"},
  {"id": "antonio-costa", "canonical_name": "António Costa", "keywords": ["Costa"], "category": "politics"}
]}"#;

pub const LEXICON: &str = "# fixture\nvitoria\t1\nmau\t-1\n";

pub fn dump() -> String {
    let mut lines = vec![
        r#"{"id":"a1","timestamp":"2015-07-10T09:00:00Z","text":"CR7 golo, golo e vitoria!! http://t.co/abcdef123"}"#.to_string(),
        r#"{"id":"a2","timestamp":"2015-07-10T10:30:00Z","text":"Ronaldo golo e golo no jogo, que vitoria para o jogo"}"#.to_string(),
        r#"{"id":"a3","timestamp":"2015-07-10T11:00:00Z","text":"CR7 golo"}"#.to_string(),
    ];
    for i in 1..=5 {
        lines.push(format!(
            r#"{{"id":"b{i}","timestamp":"2015-07-11T0{i}:00:00Z","text":"Benfica vence o campeonato nacional mais uma vez, dia {i}"}}"#
        ));
    }
    lines.push(
        r#"{"id":"c1","timestamp":"2015-07-12T15:00:00Z","text":"Costa apresenta o orçamento do estado no parlamento hoje"}"#
            .to_string(),
    );
    lines.push(r#"{"id":"z1","timestamp":"2015-07-12T16:00:00Z","text":"nada a ver com ninguem em particular hoje"}"#.to_string());
    lines.join("\n") + "\n"
}

pub fn day(d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 7, d).unwrap()
}

pub struct Fixture {
    pub dir: TempDir,
    pub catalog: PathBuf,
    pub dump: PathBuf,
    pub lexicon: PathBuf,
    pub store: PathBuf,
    pub models: PathBuf,
}

impl Fixture {
    /// Writes the input files only.
    pub fn files() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let path = |name: &str| dir.path().join(name);
        fs::write(path("catalog.json"), CATALOG).unwrap();
        fs::write(path("dump.jsonl"), dump()).unwrap();
        fs::write(path("lexicon.tsv"), LEXICON).unwrap();
        Self {
            catalog: path("catalog.json"),
            dump: path("dump.jsonl"),
            lexicon: path("lexicon.tsv"),
            store: path("store"),
            models: path("models"),
            dir,
        }
    }

    /// Files plus an ingested store and one single-topic model per entity.
    pub fn built() -> Self {
        let fx = Self::files();
        let catalog = load_catalog(fs::File::open(&fx.catalog).unwrap()).unwrap();
        let store = FileStore::open(&fx.store).unwrap();
        store.save_catalog(&catalog).unwrap();
        ingest_dump(fs::read(&fx.dump).unwrap().as_slice(), &catalog, &store).unwrap();
        store.flush().unwrap();
        let pre = Preprocessor::new(&catalog, PreprocessConfig::default());
        let params = single_topic_params();
        let models = build_scoped_models(
            ScopeMode::PerEntity,
            DateRange::new(day(10), day(12)).unwrap(),
            &store,
            &catalog,
            &pre,
            &params,
        )
        .unwrap();
        for model in models.values() {
            save_model(&fx.models, model).unwrap();
        }
        fx
    }
}

pub fn single_topic_params() -> LdaParams {
    LdaParams {
        topics: 1,
        alpha: 0.5,
        beta: 0.01,
        iterations: 20,
        burn_in: 5,
        seed: 42,
    }
}

/// Minimal blocking HTTP/1.1 GET returning (status, body).
pub fn http_get(addr: SocketAddr, path: &str) -> (u16, String) {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(
        stream,
        "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).unwrap();
    let raw = String::from_utf8(raw).unwrap();
    let (head, body) = raw.split_once("\r\n\r\n").unwrap();
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    let chunked = head
        .lines()
        .any(|l| l.eq_ignore_ascii_case("transfer-encoding: chunked"));
    let body = if chunked {
        dechunk(body)
    } else {
        body.to_string()
    };
    (status, body)
}

fn dechunk(mut rest: &str) -> String {
    let mut out = String::new();
    loop {
        let (size, tail) = rest.split_once("\r\n").unwrap();
        let size = usize::from_str_radix(size.trim(), 16).unwrap();
        if size == 0 {
            return out;
        }
        out.push_str(&tail[..size]);
        rest = &tail[size + 2..];
    }
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sentibubbles")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}
