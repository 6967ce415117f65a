use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use sentibubbles::aggregate::{build_corpus, DateRange, Scope};
use sentibubbles::catalog::load_catalog;
use sentibubbles::ingest::{ingest_dump, IngestReport};
use sentibubbles::lda::LdaParams;
use sentibubbles::preprocess::{read_term_list, PreprocessConfig, Preprocessor};
use sentibubbles::service::{self, Params, QueryService, Snapshot};
use sentibubbles::store::{FileStore, RecordStore};
use sentibubbles::topics::{build_scoped_models, save_model, ScopeMode};

#[derive(Parser)]
#[command(
    name = "sentibubbles",
    version,
    about = "Entity-centric daily topics and sentiment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Match dump records to entities and append them to the store.
    Ingest(IngestArgs),
    /// Fit topic models for one or all scoping modes.
    Build(BuildArgs),
    /// Serve the JSON API.
    Serve(ServeArgs),
    /// Print one API response body without starting a server.
    Query(QueryArgs),
    /// Export a scoped corpus as tab-separated `term:count` lines.
    Corpus(CorpusArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Entity catalog (JSON).
    #[arg(long, env = "SENTIBUBBLES_CATALOG")]
    catalog: PathBuf,
    /// Store directory, created if missing.
    #[arg(long, env = "SENTIBUBBLES_STORE")]
    store: PathBuf,
    /// Newline-delimited JSON dump files.
    #[arg(required = true)]
    dumps: Vec<PathBuf>,
}

#[derive(Args, Clone)]
struct PreprocessArgs {
    /// Replace the bundled stopword lists with this file.
    #[arg(long, env = "SENTIBUBBLES_STOPWORDS")]
    stopwords: Option<PathBuf>,
    /// Replace the bundled whitelist with this file.
    #[arg(long, env = "SENTIBUBBLES_WHITELIST")]
    whitelist: Option<PathBuf>,
    #[arg(long, env = "SENTIBUBBLES_MIN_TWEET_CHARS", default_value_t = 40)]
    min_tweet_chars: usize,
    #[arg(long, env = "SENTIBUBBLES_MIN_TOKEN_CHARS", default_value_t = 3)]
    min_token_chars: usize,
}

impl PreprocessArgs {
    fn config(&self) -> Result<PreprocessConfig> {
        let defaults = PreprocessConfig::default();
        let read = |path: &Path| -> Result<_> {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            read_term_list(BufReader::new(file))
                .with_context(|| format!("reading {}", path.display()))
        };
        let stopwords = match &self.stopwords {
            Some(p) => read(p)?,
            None => defaults.stopwords().clone(),
        };
        let whitelist = match &self.whitelist {
            Some(p) => read(p)?,
            None => defaults.whitelist().clone(),
        };
        Ok(PreprocessConfig::new(
            self.min_tweet_chars,
            self.min_token_chars,
            stopwords,
            whitelist,
        )?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Global,
    Category,
    Entity,
    All,
}

impl ModeArg {
    fn modes(self) -> Vec<ScopeMode> {
        match self {
            ModeArg::Global => vec![ScopeMode::Global],
            ModeArg::Category => vec![ScopeMode::PerCategory],
            ModeArg::Entity => vec![ScopeMode::PerEntity],
            ModeArg::All => vec![
                ScopeMode::Global,
                ScopeMode::PerCategory,
                ScopeMode::PerEntity,
            ],
        }
    }
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, env = "SENTIBUBBLES_STORE")]
    store: PathBuf,
    /// Directory receiving model files.
    #[arg(long, env = "SENTIBUBBLES_MODELS")]
    models: PathBuf,
    #[arg(long, value_enum, env = "SENTIBUBBLES_MODE", default_value = "global")]
    mode: ModeArg,
    /// First day (defaults to the earliest stored day).
    #[arg(long)]
    from: Option<NaiveDate>,
    /// Last day (defaults to the latest stored day).
    #[arg(long)]
    to: Option<NaiveDate>,
    #[arg(long, env = "SENTIBUBBLES_TOPICS", default_value_t = 10)]
    topics: usize,
    /// Document-topic concentration (defaults to 50 / topics).
    #[arg(long, env = "SENTIBUBBLES_ALPHA")]
    alpha: Option<f64>,
    #[arg(long, env = "SENTIBUBBLES_BETA", default_value_t = 0.01)]
    beta: f64,
    #[arg(long, env = "SENTIBUBBLES_ITERS", default_value_t = 1000)]
    iters: usize,
    #[arg(long, env = "SENTIBUBBLES_BURN_IN", default_value_t = 200)]
    burn_in: usize,
    #[arg(long, env = "SENTIBUBBLES_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    preprocess: PreprocessArgs,
}

impl BuildArgs {
    fn params(&self) -> LdaParams {
        LdaParams {
            topics: self.topics,
            alpha: self.alpha.unwrap_or(50.0 / self.topics.max(1) as f64),
            beta: self.beta,
            iterations: self.iters,
            burn_in: self.burn_in,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct ArtifactArgs {
    #[arg(long, env = "SENTIBUBBLES_STORE")]
    store: PathBuf,
    #[arg(long, env = "SENTIBUBBLES_MODELS")]
    models: PathBuf,
    /// Polarity lexicon (`term<TAB>polarity` lines).
    #[arg(long, env = "SENTIBUBBLES_LEXICON")]
    lexicon: PathBuf,
    #[command(flatten)]
    preprocess: PreprocessArgs,
}

impl ArtifactArgs {
    fn snapshot(&self) -> Result<Snapshot> {
        Ok(Snapshot::load(
            &self.store,
            &self.models,
            &self.lexicon,
            self.preprocess.config()?,
        )?)
    }
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    artifacts: ArtifactArgs,
    #[arg(long, env = "SENTIBUBBLES_LISTEN", default_value = "127.0.0.1:8080")]
    listen: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Section {
    Entities,
    Bubbles,
    Trend,
    Topics,
    Tweets,
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    artifacts: ArtifactArgs,
    #[arg(long, value_enum)]
    section: Section,
    /// Entity id (all sections except `entities`).
    entity: Option<String>,
    /// Day, YYYY-MM-DD.
    date: Option<String>,
    #[arg(long)]
    from: Option<String>,
    #[arg(long)]
    to: Option<String>,
    #[arg(long)]
    limit: Option<String>,
    #[arg(long)]
    term: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    n_topics: Option<String>,
    #[arg(long)]
    n_words: Option<String>,
}

impl QueryArgs {
    fn params(&self) -> Params {
        let pairs = [
            ("date", &self.date),
            ("from", &self.from),
            ("to", &self.to),
            ("limit", &self.limit),
            ("term", &self.term),
            ("mode", &self.mode),
            ("n_topics", &self.n_topics),
            ("n_words", &self.n_words),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long, env = "SENTIBUBBLES_STORE")]
    store: PathBuf,
    /// `global`, `category:<label>` or `entity:<id>`.
    #[arg(long, default_value = "global")]
    scope: String,
    #[arg(long)]
    from: Option<NaiveDate>,
    #[arg(long)]
    to: Option<NaiveDate>,
    #[command(flatten)]
    preprocess: PreprocessArgs,
}

fn date_range(
    store: &FileStore,
    from: Option<NaiveDate>,
    to: Option<NaiveDate>,
) -> Result<DateRange> {
    let bounds = store.date_bounds();
    let from = from.or(bounds.map(|b| b.0));
    let to = to.or(bounds.map(|b| b.1));
    match (from, to) {
        (Some(from), Some(to)) => Ok(DateRange::new(from, to)?),
        _ => bail!("store at {} is empty", store.dir().display()),
    }
}

fn print_report(label: &str, r: &IngestReport) {
    println!(
        "{label}: read={} matched={} stored={} skipped={}",
        r.read, r.matched, r.stored, r.skipped
    );
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let file = File::open(&args.catalog)
        .with_context(|| format!("opening catalog {}", args.catalog.display()))?;
    let catalog = load_catalog(BufReader::new(file))
        .with_context(|| format!("loading catalog {}", args.catalog.display()))?;
    let store = FileStore::open(&args.store)?;
    store.save_catalog(&catalog)?;

    let mut total = IngestReport::default();
    for path in &args.dumps {
        let file = File::open(path).with_context(|| format!("opening dump {}", path.display()))?;
        let report = ingest_dump(BufReader::new(file), &catalog, &store)
            .with_context(|| format!("ingesting {}", path.display()))?;
        print_report(&path.display().to_string(), &report);
        total += report;
    }
    store.flush()?;
    if args.dumps.len() > 1 {
        print_report("total", &total);
    }
    Ok(())
}

fn cmd_build(args: BuildArgs) -> Result<()> {
    let params = args.params();
    params.validate()?;
    let store = FileStore::open(&args.store)?;
    let catalog = store.load_catalog()?;
    let range = date_range(&store, args.from, args.to)?;
    let preprocessor = Preprocessor::new(&catalog, args.preprocess.config()?);

    let mut written = 0;
    for mode in args.mode.modes() {
        let models = build_scoped_models(mode, range, &store, &catalog, &preprocessor, &params)?;
        if models.is_empty() {
            eprintln!("warning: no non-empty corpus for mode {mode:?} in {range}");
        }
        for model in models.values() {
            let path = save_model(&args.models, model)?;
            println!(
                "scope={} docs={} vocab={} topics={} file={}",
                model.scope,
                model.doc_keys.len(),
                model.vocabulary.len(),
                model.topics(),
                path.display()
            );
            written += 1;
        }
    }
    if written == 0 {
        bail!("every requested scope was empty; no model written");
    }
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Result<()> {
    let snapshot = args.artifacts.snapshot()?;
    let service = Arc::new(QueryService::new(snapshot));
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&args.listen)
            .await
            .with_context(|| format!("binding {}", args.listen))?;
        let addr = listener.local_addr()?;
        println!("listening on http://{addr}");
        std::io::stdout().flush()?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        service::serve(listener, service, shutdown).await?;
        Ok(())
    })
}

fn cmd_query(args: QueryArgs) -> Result<bool> {
    let snapshot = args.artifacts.snapshot()?;
    let params = args.params();
    let entity = || {
        args.entity
            .as_deref()
            .ok_or_else(|| anyhow!("an entity id is required for this section"))
    };
    let response = match args.section {
        Section::Entities => snapshot.entities(),
        Section::Bubbles => snapshot.bubbles(entity()?, &params),
        Section::Trend => snapshot.trend(entity()?, &params),
        Section::Topics => snapshot.topics(entity()?, &params),
        Section::Tweets => snapshot.tweets(entity()?, &params),
    };
    println!("{}", response.body);
    Ok(response.is_success())
}

fn cmd_corpus(args: CorpusArgs) -> Result<()> {
    let scope: Scope = args.scope.parse().map_err(|e: String| anyhow!(e))?;
    let store = FileStore::open(&args.store)?;
    let catalog = store.load_catalog()?;
    let range = date_range(&store, args.from, args.to)?;
    let preprocessor = Preprocessor::new(&catalog, args.preprocess.config()?);
    let corpus = build_corpus(&scope, range, &store, &catalog, &preprocessor)?;
    let stdout = std::io::stdout();
    corpus.write_interchange(stdout.lock())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(tracing::Level::WARN)
        .init();

    let outcome = match cli.command {
        Command::Ingest(a) => cmd_ingest(a).map(|_| true),
        Command::Build(a) => cmd_build(a).map(|_| true),
        Command::Serve(a) => cmd_serve(a).map(|_| true),
        Command::Query(a) => cmd_query(a),
        Command::Corpus(a) => cmd_corpus(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
