mod config;

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use legalmeta::actors::{feature_rows, read_dataset, write_dataset, FeatureContext, TransitivityLexicon};
use legalmeta::corpus::LabelMap;
use legalmeta::engine::{load_annotated, to_jsonl, HeuristicOptions};
use legalmeta::eval::Ratio;
use legalmeta::*;

use config::FileConfig;

const USAGE: u8 = 1;
const DATA: u8 = 2;
const INTERNAL: u8 = 3;

struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure {
        code: USAGE,
        err: anyhow!("{}", msg),
    }
}

fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: DATA,
        err: e.into(),
    }
}

type Outcome<T = ()> = Result<T, Failure>;

#[derive(Parser)]
#[command(name = "legalmeta", version, about = "Semantic metadata extraction for legal statements")]
struct Cli {
    /// TOML file supplying any flag; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Annotate a corpus and write annotated statements as JSON Lines.
    Annotate(AnnotateArgs),
    /// Print the nodes a tree pattern selects, one line per match.
    Query(QueryArgs),
    /// Write the actor feature dataset as CSV.
    Features(FeaturesArgs),
    /// Train the agent, target and auxiliary-party forests.
    TrainActors(TrainArgs),
    /// Refine actor annotations into roles.
    ClassifyActors(ClassifyArgs),
    /// Score predicted annotations against gold annotations.
    Eval(EvalArgs),
    /// Cohen's kappa between two annotators.
    Kappa(KappaArgs),
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus file (JSON Lines).
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Stop at the first malformed statement (the default).
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Skip malformed statements with a warning.
    #[arg(long)]
    lenient: bool,
    /// Map from a foreign dependency label set to the canonical one.
    #[arg(long, value_name = "FILE")]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct EngineArgs {
    /// Lexicon directory; the shipped lexicons when absent.
    #[arg(long, value_name = "DIR")]
    lexicons: Option<PathBuf>,
    /// Rule file; the shipped rules when absent.
    #[arg(long, value_name = "FILE")]
    rules: Option<PathBuf>,
    /// Also resolve same-type annotations that overlap without nesting.
    #[arg(long)]
    merge_overlaps: bool,
}

#[derive(Args)]
struct RoleArgs {
    #[arg(long)]
    t1: Option<f64>,
    #[arg(long)]
    t2: Option<f64>,
    #[arg(long)]
    t3: Option<f64>,
    /// Verb transitivity table; the shipped one when absent.
    #[arg(long, value_name = "FILE")]
    transitivity: Option<PathBuf>,
}

#[derive(Args)]
struct AnnotateArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// Actor model; when given, actors are also refined into roles.
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    #[command(flatten)]
    roles: RoleArgs,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    /// Tree pattern, e.g. "PP << marker:condition".
    pattern: String,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, value_name = "DIR")]
    lexicons: Option<PathBuf>,
    /// Use the marker subset of this rule scope.
    #[arg(long)]
    scope: Option<String>,
}

#[derive(Args)]
struct FeaturesArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// Labelled annotations; actors come from the engine when absent and rows are unlabelled.
    #[arg(long, value_name = "FILE")]
    gold: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    transitivity: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Labelled feature dataset (CSV).
    #[arg(long, value_name = "FILE")]
    features: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trees per forest.
    #[arg(long)]
    trees: Option<usize>,
    /// Model file to write.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// Annotations to refine; the engine's own output when absent.
    #[arg(long, value_name = "FILE")]
    pred: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    #[command(flatten)]
    roles: RoleArgs,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    gold: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pred: Option<PathBuf>,
    /// Concepts left out of scoring (default: constraint,result,reference).
    #[arg(long, value_delimiter = ',')]
    exclude: Option<Vec<String>>,
    /// Where to write the JSON report.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KappaArgs {
    /// First annotator.
    #[arg(long, value_name = "FILE")]
    gold: Option<PathBuf>,
    /// Second annotator.
    #[arg(long, value_name = "FILE")]
    pred: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

fn required(value: Option<PathBuf>, flag: &str) -> Outcome<PathBuf> {
    value.ok_or_else(|| usage(format!("missing --{} (flag or config key `{}`)", flag, flag.replace('-', "_"))))
}

fn existing(path: &Path, what: &str) -> Outcome<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(data(anyhow!("{} not found: {}", what, path.display())))
    }
}

fn mode(c: &CorpusArgs, cfg: &FileConfig) -> ValidationMode {
    let strict = if c.lenient {
        false
    } else if c.strict {
        true
    } else {
        cfg.strict.unwrap_or(true)
    };
    if strict {
        ValidationMode::Strict
    } else {
        ValidationMode::Lenient
    }
}

fn load_statements(c: &CorpusArgs, cfg: &FileConfig) -> Outcome<Vec<Statement>> {
    let path = required(pick(&c.corpus, &cfg.corpus), "corpus")?;
    existing(&path, "corpus file")?;
    let labels = match pick(&c.labels, &cfg.labels) {
        Some(p) => {
            existing(&p, "label map")?;
            let text = fs::read_to_string(&p).map_err(|e| data(anyhow!("cannot read {}: {}", p.display(), e)))?;
            Some(LabelMap::parse(&text).map_err(|e| data(anyhow!("{}: {}", p.display(), e)))?)
        }
        None => None,
    };
    let opts = LoadOptions {
        mode: mode(c, cfg),
        labels,
    };
    let corpus = load_corpus(&path, &opts).map_err(data)?;
    if !corpus.skipped.is_empty() {
        log::warn!("{} statement(s) skipped", corpus.skipped.len());
    }
    Ok(corpus.statements)
}

fn load_lexicon(dir: Option<PathBuf>, mode: ValidationMode) -> Outcome<Lexicon> {
    match dir {
        Some(dir) => {
            if !dir.is_dir() {
                return Err(data(anyhow!("lexicon directory not found: {}", dir.display())));
            }
            Lexicon::load(&dir, mode).map_err(data)
        }
        None => Ok(Lexicon::builtin()),
    }
}

fn build_engine(e: &EngineArgs, cfg: &FileConfig, mode: ValidationMode) -> Outcome<Engine> {
    let lexicon = load_lexicon(pick(&e.lexicons, &cfg.lexicons), mode)?;
    let rules = match pick(&e.rules, &cfg.rules) {
        Some(p) => {
            existing(&p, "rule file")?;
            RuleSet::load(&p).map_err(|err| data(anyhow!("{}: {}", p.display(), err)))?
        }
        None => RuleSet::builtin(),
    };
    let options = EngineOptions {
        heuristics: HeuristicOptions {
            merge_partial_overlaps: e.merge_overlaps || cfg.merge_overlaps.unwrap_or(false),
        },
    };
    Ok(Engine::new(rules, lexicon, options))
}

fn workers(flag: Option<usize>, cfg: &FileConfig) -> Outcome<usize> {
    match flag.or(cfg.workers) {
        Some(0) => Err(usage("--workers must be at least 1")),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn thresholds(r: &RoleArgs, cfg: &FileConfig) -> Outcome<Thresholds> {
    let d = Thresholds::default();
    let th = Thresholds {
        t1: r.t1.or(cfg.t1).unwrap_or(d.t1),
        t2: r.t2.or(cfg.t2).unwrap_or(d.t2),
        t3: r.t3.or(cfg.t3).unwrap_or(d.t3),
    };
    th.validate().map_err(usage)?;
    Ok(th)
}

fn transitivity(flag: &Option<PathBuf>, cfg: &FileConfig) -> Outcome<TransitivityLexicon> {
    match pick(flag, &cfg.transitivity) {
        Some(p) => {
            existing(&p, "transitivity table")?;
            TransitivityLexicon::load(&p).map_err(data)
        }
        None => Ok(TransitivityLexicon::builtin()),
    }
}

fn load_annotations(path: &Path) -> Outcome<Vec<AnnotatedStatement>> {
    existing(path, "annotation file")?;
    load_annotated(path).map_err(data)
}

/// Writes to `out`, or standard output when absent.
fn emit(out: Option<PathBuf>, bytes: &[u8]) -> Outcome {
    match out {
        Some(p) => fs::write(&p, bytes).map_err(|e| data(anyhow!("cannot write {}: {}", p.display(), e))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| data(anyhow!("cannot write standard output: {}", e)))
        }
    }
}

/// Pairs each annotated statement with its corpus statement.
fn align<'a>(
    annotated: &[AnnotatedStatement],
    statements: &'a [Statement],
    source: &Path,
) -> Outcome<Vec<&'a Statement>> {
    let by_id: HashMap<&str, &Statement> = statements.iter().map(|s| (s.id(), s)).collect();
    annotated
        .iter()
        .map(|a| {
            by_id.get(a.id.as_str()).copied().ok_or_else(|| {
                data(anyhow!("statement `{}` in {} is not in the corpus", a.id, source.display()))
            })
        })
        .collect()
}

fn refine(
    annotated: &mut [AnnotatedStatement],
    statements: &[&Statement],
    ctx: FeatureContext<'_>,
    model: &ActorModel,
    th: &Thresholds,
) -> Outcome {
    for (a, s) in annotated.iter_mut().zip(statements) {
        classify_actors(a, s, ctx, model, th).map_err(data)?;
    }
    Ok(())
}

fn load_model(path: Option<PathBuf>) -> Outcome<ActorModel> {
    let path = required(path, "model")?;
    existing(&path, "model file")?;
    ActorModel::load(&path).map_err(|e| data(anyhow!("{}: {}", path.display(), e)))
}

fn cmd_annotate(a: AnnotateArgs, cfg: &FileConfig) -> Outcome {
    let statements = load_statements(&a.corpus, cfg)?;
    let engine = build_engine(&a.engine, cfg, mode(&a.corpus, cfg))?;
    let workers = workers(a.workers, cfg)?;
    let mut annotated = engine.annotate_all(&statements, workers);
    if let Some(path) = pick(&a.model, &cfg.model) {
        let model = load_model(Some(path))?;
        let th = thresholds(&a.roles, cfg)?;
        let tl = transitivity(&a.roles.transitivity, cfg)?;
        let ctx = FeatureContext {
            lexicon: engine.lexicon(),
            transitivity: &tl,
        };
        let by_id: HashMap<&str, &Statement> = statements.iter().map(|s| (s.id(), s)).collect();
        let order: Vec<&Statement> = annotated.iter().map(|x| by_id[x.id.as_str()]).collect();
        refine(&mut annotated, &order, ctx, &model, &th)?;
    }
    emit(pick(&a.out, &cfg.out), to_jsonl(&annotated).as_bytes())
}

fn cmd_query(q: QueryArgs, cfg: &FileConfig) -> Outcome {
    let pattern = compile_pattern(&q.pattern).map_err(|e| usage(e.render(&q.pattern)))?;
    let statements = load_statements(&q.corpus, cfg)?;
    let lexicon = load_lexicon(pick(&q.lexicons, &cfg.lexicons), mode(&q.corpus, cfg))?;
    let scope = match &q.scope {
        Some(name) => Scope::Rule(name),
        None => Scope::Full,
    };
    let mut out = String::new();
    for s in &statements {
        for m in MatchContext::new(s, &lexicon).find(&pattern, scope) {
            let span = s.tree().node_yield(m.target);
            out.push_str(&format!(
                "{}\t{}\t[{},{})\t{}\n",
                s.id(),
                s.tree().node(m.target).label,
                span.start,
                span.end,
                s.span_text(span)
            ));
        }
    }
    emit(None, out.as_bytes())
}

fn cmd_features(f: FeaturesArgs, cfg: &FileConfig) -> Outcome {
    let statements = load_statements(&f.corpus, cfg)?;
    let engine = build_engine(&f.engine, cfg, mode(&f.corpus, cfg))?;
    let tl = transitivity(&f.transitivity, cfg)?;
    let ctx = FeatureContext {
        lexicon: engine.lexicon(),
        transitivity: &tl,
    };
    let (mut annotated, source) = match pick(&f.gold, &cfg.gold) {
        Some(p) => (load_annotations(&p)?, p),
        None => (engine.annotate_all(&statements, workers(None, cfg)?), PathBuf::from("engine output")),
    };
    annotated.sort_by(|a, b| a.id.cmp(&b.id));
    let order = align(&annotated, &statements, &source)?;
    let mut rows = Vec::new();
    for (a, s) in annotated.iter().zip(order) {
        let found = feature_rows(s, &a.annotations, ctx).map_err(data)?;
        rows.extend(found.into_iter().map(|(feat, role)| (feat.to_row(), role)));
    }
    let mut buf = Vec::new();
    write_dataset(&mut buf, &rows).map_err(data)?;
    emit(pick(&f.out, &cfg.out), &buf)
}

fn cmd_train(t: TrainArgs, cfg: &FileConfig) -> Outcome {
    let input = required(pick(&t.features, &cfg.features), "features")?;
    let out = required(pick(&t.out, &cfg.out), "out")?;
    existing(&input, "feature dataset")?;
    let file = fs::File::open(&input).map_err(|e| data(anyhow!("cannot read {}: {}", input.display(), e)))?;
    let dataset = read_dataset(file).map_err(|e| data(anyhow!("{}: {}", input.display(), e)))?;
    let (rows, labels): (Vec<Vec<String>>, Vec<Role>) = dataset.into_iter().unzip();
    let d = ForestParams::default();
    let params = ForestParams {
        trees: t.trees.or(cfg.trees).unwrap_or(d.trees),
        seed: t.seed.or(cfg.seed).unwrap_or(d.seed),
        ..d
    };
    if params.trees == 0 {
        return Err(usage("--trees must be at least 1"));
    }
    let model = ActorModel::train(&rows, &labels, &params).map_err(|e| data(anyhow!("{}: {}", input.display(), e)))?;
    log::info!("trained on {} rows, seed {}", rows.len(), params.seed);
    emit(Some(out), model.to_json().as_bytes())
}

fn cmd_classify(c: ClassifyArgs, cfg: &FileConfig) -> Outcome {
    let statements = load_statements(&c.corpus, cfg)?;
    let engine = build_engine(&c.engine, cfg, mode(&c.corpus, cfg))?;
    let model = load_model(pick(&c.model, &cfg.model))?;
    let th = thresholds(&c.roles, cfg)?;
    let tl = transitivity(&c.roles.transitivity, cfg)?;
    let ctx = FeatureContext {
        lexicon: engine.lexicon(),
        transitivity: &tl,
    };
    let (mut annotated, source) = match pick(&c.pred, &cfg.pred) {
        Some(p) => (load_annotations(&p)?, p),
        None => (
            engine.annotate_all(&statements, workers(c.workers, cfg)?),
            PathBuf::from("engine output"),
        ),
    };
    annotated.sort_by(|a, b| a.id.cmp(&b.id));
    let order = align(&annotated, &statements, &source)?;
    refine(&mut annotated, &order, ctx, &model, &th)?;
    emit(pick(&c.out, &cfg.out), to_jsonl(&annotated).as_bytes())
}

fn pair(r: Option<Ratio>) -> String {
    r.map_or("N/A".to_string(), |r| {
        let t = r.tenths();
        format!("{}.{}", t / 10, t % 10)
    })
}

fn cmd_eval(e: EvalArgs, cfg: &FileConfig) -> Outcome {
    let gold_path = required(pick(&e.gold, &cfg.gold), "gold")?;
    let pred_path = required(pick(&e.pred, &cfg.pred), "pred")?;
    let gold = load_annotations(&gold_path)?;
    let pred = load_annotations(&pred_path)?;
    let mut opts = EvalOptions::default();
    if let Some(names) = pick(&e.exclude, &cfg.exclude) {
        opts.excluded = names
            .iter()
            .filter(|n| !n.is_empty())
            .map(|n| n.parse::<Concept>().map_err(|_| usage(format!("unknown concept `{}` in --exclude", n))))
            .collect::<Result<_, _>>()?;
    }
    let report = evaluate(&pred, &gold, &opts).map_err(data)?;
    let mut text = report.to_table();
    text.push_str(&format!(
        "\nphrase subtotal P / R: {} / {}\nstatement subtotal P / R: {} / {}\n",
        pair(report.phrase_total.precision),
        pair(report.phrase_total.recall),
        pair(report.statement_total.precision),
        pair(report.statement_total.recall)
    ));
    if let Some(out) = pick(&e.out, &cfg.out) {
        let json = serde_json::to_string_pretty(&report).map_err(|err| Failure {
            code: INTERNAL,
            err: err.into(),
        })?;
        emit(Some(out), (json + "\n").as_bytes())?;
    }
    emit(None, text.as_bytes())
}

fn cmd_kappa(k: KappaArgs, cfg: &FileConfig) -> Outcome {
    let a = load_annotations(&required(pick(&k.gold, &cfg.gold), "gold")?)?;
    let b = load_annotations(&required(pick(&k.pred, &cfg.pred), "pred")?)?;
    let r = cohen_kappa(&a, &b).map_err(data)?;
    if let Some(out) = pick(&k.out, &cfg.out) {
        let json = serde_json::to_string_pretty(&r).map_err(|err| Failure {
            code: INTERNAL,
            err: err.into(),
        })?;
        emit(Some(out), (json + "\n").as_bytes())?;
    }
    let line = format!(
        "kappa {:.4} (items {}, observed {:.4}, expected {:.4})\n",
        r.kappa, r.items, r.observed, r.expected
    );
    emit(None, line.as_bytes())
}

fn run(cli: Cli) -> Outcome {
    let cfg = match &cli.config {
        Some(p) => {
            existing(p, "config file")?;
            FileConfig::load(p).map_err(|e| usage(format!("{:#}", e)))?
        }
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Annotate(a) => cmd_annotate(a, &cfg),
        Command::Query(q) => cmd_query(q, &cfg),
        Command::Features(f) => cmd_features(f, &cfg),
        Command::TrainActors(t) => cmd_train(t, &cfg),
        Command::ClassifyActors(c) => cmd_classify(c, &cfg),
        Command::Eval(e) => cmd_eval(e, &cfg),
        Command::Kappa(k) => cmd_kappa(k, &cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(cli))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
        // The panic hook has already reported the message.
        Err(_) => ExitCode::from(INTERNAL),
    }
}
