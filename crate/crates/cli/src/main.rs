//! `postforge` command line.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, NaiveDate, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use postforge_core::classifier::{
    evaluate, samples, select_features, split_dataset, train_mlp, train_svm, train_tree, tune_cp, tune_hidden_units,
    tune_svm, MlpParams, Model, ModelKind, SelectionMethod, SelectionParams, SvmParams, TrainingConfig, TreeParams,
    TuningMode, PAPER_CP,
};
use postforge_core::features::{
    build_dataset, parse_feature_list, parse_vote_sheets, read_dataset, summarize, write_dataset, FeatureName,
    LabeledExample, SummaryOptions,
};
use postforge_core::ingest::{fetch_questions, ApiConfig, FetchRequest, SourceSpec, Store};
use postforge_core::matcher::Weights;
use postforge_core::snippets::{draft_for_question, Corpus, DraftOptions, DraftOutcome, DEFAULT_MIN_LINES};
use postforge_service::{
    load_context, load_profile, run_pipeline, PipelineConfig, PipelineInputs, PipelineSettings, Service, ServiceParts,
    SystemClock,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "postforge", version, about = "Find deficient Q&A posts and draft answers from your own code")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch questions from the API or a dump file into a store.
    Ingest(IngestArgs),
    /// Join vote sheets with stored questions into a labeled dataset.
    Features(FeaturesArgs),
    /// Train a classifier on a dataset.
    Train(TrainArgs),
    /// Evaluate a model on a dataset.
    Eval(EvalArgs),
    /// Wrapper feature selection.
    Select(SelectArgs),
    /// Run one suggestion round and print the outcome.
    Suggest(SuggestArgs),
    /// Draft an answer for a stored question from a source corpus.
    Draft(DraftArgs),
    /// Serve the review HTTP API.
    Serve(ServeArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    store: PathBuf,
    /// Read a dump file (one record per line) instead of calling the API.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[arg(long)]
    tag: Option<String>,
    /// Start of the last-activity window (YYYY-MM-DD or RFC 3339).
    #[arg(long, value_parser = parse_time)]
    from: Option<DateTime<Utc>>,
    #[arg(long, value_parser = parse_time)]
    to: Option<DateTime<Utc>>,
    #[arg(long, default_value_t = 10)]
    pages: u32,
    #[arg(long, default_value = "stackoverflow")]
    site: String,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    store: PathBuf,
    /// Vote sheets, one JSON object per line.
    #[arg(long)]
    votes: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the per-feature distribution summary as TSV.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Dt,
    Mlp,
    Svm,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Dt => ModelKind::Dt,
            ModelArg::Mlp => ModelKind::Mlp,
            ModelArg::Svm => ModelKind::Svm,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "dt")]
    model: ModelArg,
    #[arg(long)]
    out: PathBuf,
    /// Tree complexity parameter; tuned by cross-validation when omitted.
    #[arg(long)]
    cp: Option<f64>,
    #[arg(long, default_value_t = 66)]
    hidden: usize,
    #[arg(long, default_value_t = 2f64.powi(-5))]
    gamma: f64,
    #[arg(long, default_value_t = 2f64.powi(18))]
    cost: f64,
    #[arg(long, default_value_t = 3)]
    degree: u32,
    /// Grid-search MLP hidden units or SVM gamma/cost instead of using the flags.
    #[arg(long)]
    tune: bool,
    /// Comma-separated feature subset (default: all eleven).
    #[arg(long)]
    features: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    /// Tune with leave-one-out instead of k-fold.
    #[arg(long)]
    loocv: bool,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Write the held-out split here.
    #[arg(long)]
    test_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "rfe")]
    method: SelectionMethod,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = PAPER_CP)]
    cp: f64,
}

#[derive(Args)]
struct SuggestArgs {
    #[arg(long)]
    store: PathBuf,
    /// Directory of the developer's current sources.
    #[arg(long)]
    context: PathBuf,
    #[arg(long)]
    profile: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Evaluate as of this time instead of now.
    #[arg(long, value_parser = parse_time)]
    now: Option<DateTime<Utc>>,
    /// code,api,text
    #[arg(long, value_parser = parse_weights)]
    weights: Option<Weights>,
    #[arg(long, default_value_t = postforge_service::config::DEFAULT_SIMILARITY_FLOOR)]
    floor: f64,
    #[arg(long, default_value = "java")]
    extensions: String,
}

#[derive(Args)]
struct DraftArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    question: u64,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_LINES)]
    min_lines: usize,
    /// Match renamed clones too.
    #[arg(long)]
    normalize: bool,
    /// Print only the snippet text.
    #[arg(long)]
    snippet: bool,
    #[arg(long, default_value = "java")]
    extensions: String,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Post approved answers to the live site (also needs dry_run = false).
    #[arg(long)]
    live: bool,
}

fn parse_time(s: &str) -> Result<DateTime<Utc>, String> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
        .map_err(|_| format!("{s:?}: expected YYYY-MM-DD or RFC 3339"))
}

fn parse_weights(s: &str) -> Result<Weights, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let [code, api, text] = v[..] else {
        return Err("expected code,api,text".into());
    };
    let w = Weights { code, api, text };
    w.validate().map_err(|e| e.to_string())?;
    Ok(w)
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn extensions(s: &str) -> Vec<String> {
    s.split(',').map(|e| e.trim().trim_start_matches('.').to_string()).filter(|e| !e.is_empty()).collect()
}

async fn ingest(a: IngestArgs) -> Result<()> {
    let store = Store::open(&a.store)?;
    let req = FetchRequest {
        tag: a.tag,
        from: a.from,
        to: a.to,
        page_limit: a.pages,
    };
    let api = ApiConfig {
        site: a.site,
        ..ApiConfig::default()
    };
    let source = match &a.dump {
        Some(p) => SourceSpec::Dump(p),
        None => SourceSpec::Api(&api),
    };
    let (_, report) = fetch_questions(&req, source, &store).await?;
    print_json(&report)
}

fn features(a: FeaturesArgs) -> Result<()> {
    let questions = Store::open_existing(&a.store)?.load_all()?;
    let text = std::fs::read_to_string(&a.votes).with_context(|| a.votes.display().to_string())?;
    let sheets = parse_vote_sheets(&text)?;
    let (examples, report) = build_dataset(&questions, &sheets);
    write_dataset(&a.out, &examples)?;
    if let Some(p) = a.summary {
        let s = summarize(&examples, SummaryOptions::default())?;
        std::fs::write(&p, s.to_tsv()).with_context(|| p.display().to_string())?;
    }
    print_json(&report)
}

fn feature_subset(spec: Option<&str>) -> Result<Vec<FeatureName>> {
    match spec {
        Some(s) => Ok(parse_feature_list(s)?),
        None => Ok(FeatureName::ALL.to_vec()),
    }
}

fn train(a: TrainArgs) -> Result<()> {
    let data = read_dataset(&a.dataset)?;
    let features = feature_subset(a.features.as_deref())?;
    let cfg = TrainingConfig {
        split_ratio: a.split,
        rng_seed: a.seed,
        tuning_mode: if a.loocv { TuningMode::Loocv } else { TuningMode::Kfold(a.folds) },
        ..TrainingConfig::default()
    };
    cfg.validate()?;
    let (train_set, test_set) = split_dataset(&data, |e: &LabeledExample| e.label, cfg.split_ratio, cfg.rng_seed)?;
    if let Some(p) = &a.test_out {
        write_dataset(p, &test_set)?;
    }
    let train_rows = samples(&train_set);
    let mut tuning = serde_json::Map::new();
    let model: Model = match a.model {
        ModelArg::Dt => {
            let cp = match a.cp {
                Some(cp) => cp,
                None => {
                    let (cp, trace) = tune_cp(&train_rows, &features, &cfg)?;
                    tuning.insert("cp_trace".into(), serde_json::to_value(trace_cp(&trace))?);
                    cp
                }
            };
            train_tree(&train_rows, &features, cfg.tree_params(cp))?.into()
        }
        ModelArg::Mlp => {
            let h = if a.tune {
                let (h, trace) = tune_hidden_units(&train_rows, &features, &cfg)?;
                tuning.insert("hidden_trace".into(), serde_json::to_value(trace)?);
                h
            } else {
                a.hidden
            };
            train_mlp(&train_rows, &features, MlpParams::new(h, a.seed))?.into()
        }
        ModelArg::Svm => {
            let (g, c) = if a.tune {
                let cfg = TrainingConfig {
                    svm_degree: a.degree,
                    ..cfg.clone()
                };
                let (gc, trace) = tune_svm(&train_rows, &features, &cfg)?;
                tuning.insert("svm_trace".into(), serde_json::to_value(trace)?);
                gc
            } else {
                (a.gamma, a.cost)
            };
            train_svm(&train_rows, &features, SvmParams::new(g, c, a.degree))?.into()
        }
    };
    model.save(&a.out)?;
    let pairs = predictions(&model, &test_set)?;
    print_json(&serde_json::json!({
        "model": ModelKind::from(a.model).to_string(),
        "train": train_set.len(),
        "test": test_set.len(),
        "test_metrics": evaluate(&pairs),
        "tuning": tuning,
    }))
}

/// JSON has no infinity.
fn trace_cp(trace: &[(f64, f64)]) -> Vec<(String, f64)> {
    trace.iter().map(|(cp, f)| (if cp.is_infinite() { "inf".into() } else { cp.to_string() }, *f)).collect()
}

fn predictions(
    model: &Model,
    data: &[LabeledExample],
) -> Result<Vec<(postforge_core::features::Label, postforge_core::features::Label)>> {
    data.iter()
        .map(|e| Ok((model.predict(&e.features)?.label, e.label)))
        .collect()
}

fn eval(a: EvalArgs) -> Result<()> {
    let model = Model::load(&a.model)?;
    let data = read_dataset(&a.dataset)?;
    if data.is_empty() {
        bail!("{}: empty dataset", a.dataset.display());
    }
    print_json(&evaluate(&predictions(&model, &data)?))
}

fn select(a: SelectArgs) -> Result<()> {
    let data = read_dataset(&a.dataset)?;
    let params = SelectionParams {
        folds: a.folds,
        seed: a.seed,
        tree: TreeParams::with_cp(a.cp),
        ..SelectionParams::default()
    };
    print_json(&select_features(&samples(&data), &FeatureName::ALL, a.method, &params)?)
}

fn suggest(a: SuggestArgs) -> Result<()> {
    let questions = Store::open_existing(&a.store)?.load_all()?;
    let model = Model::load(&a.model)?;
    let profile = load_profile(&a.profile)?;
    let context = load_context(&a.context, &extensions(&a.extensions))?;
    for w in &context.warnings {
        eprintln!("warning: {w}");
    }
    let settings = PipelineSettings {
        weights: a.weights.unwrap_or_default(),
        similarity_floor: a.floor,
        max_suggestions_per_day: profile.max_suggestions_per_day,
        retry_period: postforge_service::config::DEFAULT_RETRY_PERIOD,
    };
    let inputs = PipelineInputs {
        questions: &questions,
        model: &model,
        profile: &profile,
        context: &context,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    print_json(&run_pipeline(&inputs, &settings, a.now.unwrap_or_else(Utc::now), &mut rng)?)
}

fn draft(a: DraftArgs) -> Result<()> {
    let store = Store::open_existing(&a.store)?;
    let q = store
        .get(a.question)?
        .with_context(|| format!("question {} is not in the store", a.question))?;
    let exts = extensions(&a.extensions);
    let exts: Vec<&str> = exts.iter().map(String::as_str).collect();
    let corpus = Corpus::load(&a.corpus, &exts)?;
    for w in &corpus.warnings {
        eprintln!("warning: {w}");
    }
    let opts = DraftOptions {
        min_lines: a.min_lines,
        normalize: a.normalize,
    };
    let outcome = draft_for_question(&q, &corpus, opts, Utc::now())?;
    match (&outcome, a.snippet) {
        (DraftOutcome::Draft(d), true) => {
            println!("{}", d.snippet);
            Ok(())
        }
        _ => print_json(&outcome),
    }
}

async fn serve(a: ServeArgs) -> Result<()> {
    let cfg = PipelineConfig::load(&a.config)?;
    let parts = ServiceParts::load(cfg, a.live)?;
    if !parts.submitter.is_live() {
        eprintln!("dry run: approved answers go to {}", parts.outbox.dir().display());
    }
    let svc = Arc::new(Service::new(parts, Arc::new(SystemClock))?);
    let addr: SocketAddr = format!("{}:{}", a.host, a.port).parse().context("bad --host/--port")?;
    postforge_service::serve(svc, addr).await?;
    Ok(())
}

fn check_exists(p: &Path) -> Result<()> {
    if !p.exists() {
        bail!("{} does not exist", p.display());
    }
    Ok(())
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("POSTFORGE_LOG").unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match cli.command {
        Command::Ingest(a) => ingest(a).await,
        Command::Features(a) => features(a),
        Command::Train(a) => {
            check_exists(&a.dataset)?;
            train(a)
        }
        Command::Eval(a) => eval(a),
        Command::Select(a) => select(a),
        Command::Suggest(a) => suggest(a),
        Command::Draft(a) => draft(a),
        Command::Serve(a) => serve(a).await,
    }
}
