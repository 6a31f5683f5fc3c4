//! The `xdrs` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser as ClapParser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{ingest, load_bundle, read_conllu_documents, CorpusError, Example, IngestOptions, SentenceAnnotation};
use crate::decoder::DecoderError;
use crate::drs::{parse_clause_document, write_clauses, Drs, DrsError, NonLexical};
use crate::encoders::{EncoderKind, FeatureMask};
use crate::evaluator::{render_table, score, AlignConfig, Category, Evaluation, Lexicon, Record};
use crate::gradsuite::{run_suite, GRADCHECK_TOLERANCE};
use crate::model::Parser;
use crate::training::{ablation_table, run_ablation_matrix, train, AblationRequest, TrainConfig, TrainData, TrainError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_INTERNAL: i32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::ConfigError(m) => CliError::Config(m),
            TrainError::Numeric(m) => CliError::Numeric(m),
            TrainError::Data(_) | TrainError::Io { .. } => CliError::Data(e.to_string()),
            TrainError::Model(m) => CliError::from(m),
        }
    }
}

impl From<DecoderError> for CliError {
    fn from(e: DecoderError) -> Self {
        match TrainError::from(e) {
            TrainError::Model(DecoderError::Autodiff(a)) => CliError::Data(a.to_string()),
            TrainError::Model(m) => CliError::Internal(m.to_string()),
            other => other.into(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

#[derive(Debug, ClapParser)]
#[command(name = "xdrs", version, about = "Cross-lingual DRS parsing")]
pub struct Cli {
    /// Print machine-readable JSON records instead of tables.
    #[arg(long, global = true)]
    pub json: bool,
    /// Where to write the run manifest.
    #[arg(long, global = true)]
    pub run_manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a dataset bundle from clause files and dependency parses.
    Ingest(IngestArgs),
    /// Train one model or an ablation matrix.
    Train(TrainArgs),
    /// Parse sentences with a trained model.
    Parse(ParseArgs),
    /// Score predicted clause files against gold.
    Evaluate(EvalArgs),
    /// Per-category scores (operators, non-lexical, lexical).
    Analyze(EvalArgs),
    /// Finite-difference checks of every composite module.
    Gradcheck,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub clauses: PathBuf,
    #[arg(long)]
    pub conllu: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Defaults to the dimension in the embedding file header.
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    #[arg(long, default_value = "en")]
    pub source_lang: String,
    #[arg(long, default_value_t = 1)]
    pub min_freq: usize,
    #[arg(long)]
    pub non_lexical: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Bundle directory written by `ingest`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// `key = value` file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub encoder: Option<String>,
    #[arg(long)]
    pub features: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Train the full encoder × feature matrix.
    #[arg(long)]
    pub ablation: bool,
    /// Train an explicit cell `encoder:features` (repeatable).
    #[arg(long = "cell")]
    pub cells: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Bundle directory; parses the test split of `--lang`.
    #[arg(long, conflicts_with = "conllu")]
    pub data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    pub lang: Option<String>,
    /// A CoNLL-U file to parse instead of a bundle split.
    #[arg(long)]
    pub conllu: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Clause file or directory of `.clf` files.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    /// Parses of the evaluated sentences; their lemmas drive the lexical split.
    #[arg(long)]
    pub conllu: Option<PathBuf>,
    /// Extra non-lexical labels, one per line.
    #[arg(long)]
    pub non_lexical: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Row label in tables and records.
    #[arg(long, default_value = "model")]
    pub name: String,
    #[arg(long, default_value = "all")]
    pub language: String,
}

/// Inputs, configuration and version of one invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub args: Vec<String>,
    pub inputs: BTreeMap<String, String>,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub config: Option<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn collect_files(p: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    if p.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(p)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
        entries.sort();
        for e in entries {
            collect_files(&e, out)?;
        }
    } else {
        out.push(p.to_path_buf());
    }
    Ok(())
}

/// SHA-256 over every file under `p` (relative path and content).
pub fn hash_path(p: &Path) -> Result<String, CliError> {
    let mut files = Vec::new();
    collect_files(p, &mut files).map_err(io_err(p))?;
    let mut h = Sha256::new();
    for f in files {
        let rel = f.strip_prefix(p).unwrap_or(&f);
        h.update(rel.to_string_lossy().as_bytes());
        h.update([0]);
        h.update(fs::read(&f).map_err(io_err(&f))?);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn read_text(p: &Path) -> Result<String, CliError> {
    fs::read_to_string(p).map_err(io_err(p))
}

fn write_text(p: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(p, text).map_err(io_err(p))
}

struct Ctx {
    json: bool,
    out: Vec<String>,
}

impl Ctx {
    fn line(&mut self, s: impl Into<String>) {
        self.out.push(s.into());
    }

    fn record<T: Serialize>(&mut self, r: &T) {
        self.out.push(serde_json::to_string(r).expect("record serializes"));
    }
}

/// Parses `args`, runs the command and returns the exit code. Output goes to
/// stdout, errors to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let mut ctx = Ctx {
        json: cli.json,
        out: Vec::new(),
    };
    let result = execute(&cli, &argv, &mut ctx);
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for l in &ctx.out {
        let _ = writeln!(lock, "{l}");
    }
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, argv: &[String], ctx: &mut Ctx) -> Result<i32, CliError> {
    let (name, default_manifest) = match &cli.command {
        Command::Ingest(a) => ("ingest", a.out.join("run.json")),
        Command::Train(a) => ("train", a.out.join("run.json")),
        Command::Parse(a) => ("parse", a.out.join("run.json")),
        Command::Evaluate(_) => ("evaluate", PathBuf::from("xdrs-evaluate.run.json")),
        Command::Analyze(_) => ("analyze", PathBuf::from("xdrs-analyze.run.json")),
        Command::Gradcheck => ("gradcheck", PathBuf::from("xdrs-gradcheck.run.json")),
    };
    let mut manifest = RunManifest {
        command: name.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        args: argv.to_vec(),
        inputs: BTreeMap::new(),
        config_hash: sha256_hex(argv.join("\0").as_bytes()),
        seed: None,
        config: None,
    };
    let code = match &cli.command {
        Command::Ingest(a) => cmd_ingest(a, ctx, &mut manifest)?,
        Command::Train(a) => cmd_train(a, ctx, &mut manifest)?,
        Command::Parse(a) => cmd_parse(a, ctx, &mut manifest)?,
        Command::Evaluate(a) => cmd_evaluate(a, ctx, &mut manifest, false)?,
        Command::Analyze(a) => cmd_evaluate(a, ctx, &mut manifest, true)?,
        Command::Gradcheck => cmd_gradcheck(ctx)?,
    };
    let path = cli.run_manifest.clone().unwrap_or(default_manifest);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_text(&path, &format!("{text}\n"))?;
    Ok(code)
}

fn add_input(m: &mut RunManifest, p: &Path) -> Result<(), CliError> {
    m.inputs.insert(p.display().to_string(), hash_path(p)?);
    Ok(())
}

fn cmd_ingest(a: &IngestArgs, ctx: &mut Ctx, m: &mut RunManifest) -> Result<i32, CliError> {
    for p in [&a.clauses, &a.conllu, &a.manifest].into_iter().chain(&a.embeddings).chain(&a.non_lexical) {
        add_input(m, p)?;
    }
    let mut opts = IngestOptions::new(&a.clauses, &a.conllu, &a.manifest, &a.out);
    opts.embeddings = a.embeddings.clone();
    opts.source_lang = a.source_lang.clone();
    opts.min_freq = a.min_freq;
    opts.non_lexical = a.non_lexical.clone();
    if let Some(p) = &a.embeddings {
        opts.embedding_dim = match a.embedding_dim {
            Some(d) => d,
            None => read_text(p)?
                .lines()
                .next()
                .and_then(|l| l.split_whitespace().nth(1))
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| CliError::Config("cannot read the embedding dimension; pass --embedding-dim".into()))?,
        };
    }
    let summary = ingest(&opts)?;
    m.config_hash = sha256_hex(serde_json::to_string(&opts).expect("options serialize").as_bytes());
    if ctx.json {
        ctx.record(&summary);
    } else {
        for (k, v) in &summary.sizes {
            ctx.line(format!("{k:<10} {v}"));
        }
        ctx.line(format!("reverted predicates {}", summary.reverted));
        ctx.line(format!("unaligned predicates {}", summary.unaligned));
        ctx.line(format!("embedding rows {}", summary.embeddings));
        ctx.line(format!("vocab hash {}", summary.vocab_hash));
    }
    Ok(EXIT_OK)
}

fn parse_cell(s: &str) -> Result<(EncoderKind, FeatureMask), CliError> {
    let (k, f) = s
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("cell `{s}` is not `encoder:features`")))?;
    Ok((k.parse().map_err(CliError::Config)?, f.parse().map_err(CliError::Config)?))
}

fn lexicon_for(non_lexical: NonLexical, lemmas: impl IntoIterator<Item = String>) -> Lexicon {
    Lexicon::new(non_lexical, lemmas)
}

fn cmd_train(a: &TrainArgs, ctx: &mut Ctx, m: &mut RunManifest) -> Result<i32, CliError> {
    let mut config = match &a.config {
        Some(p) => {
            add_input(m, p)?;
            TrainConfig::parse(&read_text(p)?)?
        }
        None => TrainConfig::default(),
    };
    if let Some(v) = &a.encoder {
        config.set("encoder", v)?;
    }
    if let Some(v) = &a.features {
        config.set("features", v)?;
    }
    if let Some(v) = a.seed {
        config.seed = v;
    }
    if let Some(v) = a.epochs {
        config.max_epochs = v;
    }
    if let Some(v) = a.patience {
        config.patience = v;
    }
    let request = if a.ablation {
        Some(AblationRequest::Full)
    } else if !a.cells.is_empty() {
        Some(AblationRequest::Cells(a.cells.iter().map(|c| parse_cell(c)).collect::<Result<_, _>>()?))
    } else {
        config.validate()?;
        None
    };
    if let Some(r) = &request {
        crate::training::ablation_cells(r, &config)?;
    }
    m.seed = Some(config.seed);
    m.config_hash = config.hash();
    m.config = Some(config.to_text());

    add_input(m, &a.data)?;
    let bundle = load_bundle(&a.data)?;
    let lexicon = lexicon_for(bundle.non_lexical.clone(), bundle.lemmas());
    let data = TrainData {
        train: &bundle.split.train,
        dev: &bundle.split.dev,
        vocab: &bundle.vocab,
        embeddings: bundle.embeddings.as_ref().filter(|_| config.features.we),
        lexicon: &lexicon,
    };
    if let Some(t) = data.embeddings {
        if t.dim() != config.word_dim {
            return Err(CliError::Config(format!(
                "word_dim is {} but the bundle embeddings have {} dimensions",
                config.word_dim,
                t.dim()
            )));
        }
    }
    fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    write_text(&a.out.join("config.txt"), &config.to_text())?;
    match request {
        None => {
            let ckpt = a.out.join("model.ckpt");
            let (report, _) = train(&config, data, Some(&ckpt))?;
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            write_text(&a.out.join("report.json"), &format!("{text}\n"))?;
            if ctx.json {
                for e in &report.epochs {
                    ctx.record(e);
                }
                ctx.record(&json!({"best_epoch": report.best_epoch, "checkpoint": ckpt}));
            } else {
                ctx.line(format!("{:>5} {:>10} {:>8} {:>8} {:>8}", "epoch", "loss", "P", "R", "F1"));
                for e in &report.epochs {
                    ctx.line(format!(
                        "{:>5} {:>10.4} {:>8.4} {:>8.4} {:>8.4}",
                        e.epoch,
                        e.train_loss,
                        e.dev.precision(),
                        e.dev.recall(),
                        e.dev.f1()
                    ));
                }
                ctx.line(format!("best epoch {} -> {}", report.best_epoch, ckpt.display()));
            }
        }
        Some(request) => {
            let results = run_ablation_matrix(&config, &request, data, &bundle.split.test, Some(&a.out))?;
            let langs: Vec<String> = bundle.split.test.keys().cloned().collect();
            let table = ablation_table(&results, &langs);
            write_text(&a.out.join("ablation.txt"), &table)?;
            let text = serde_json::to_string_pretty(&results).expect("results serialize");
            write_text(&a.out.join("ablation.json"), &format!("{text}\n"))?;
            if ctx.json {
                for r in &results {
                    for (lang, e) in &r.test {
                        ctx.record(&Record::new(&r.name(), lang, "all", &e.overall));
                    }
                }
            } else {
                ctx.line(format!("trained {} configurations", results.len()));
                ctx.line(table.trim_end());
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_parse(a: &ParseArgs, ctx: &mut Ctx, m: &mut RunManifest) -> Result<i32, CliError> {
    add_input(m, &a.model)?;
    let (parser, extra) = Parser::load(&a.model).map_err(|e| CliError::Data(e.to_string()))?;
    m.seed = extra["train_config"]["seed"].as_u64();
    let sentences: Vec<(String, SentenceAnnotation)> = match (&a.data, &a.conllu) {
        (Some(dir), _) => {
            add_input(m, dir)?;
            let bundle = load_bundle(dir)?;
            let lang = a.lang.clone().unwrap_or_else(|| {
                bundle.split.test.keys().find(|l| **l != bundle.split.source_lang).cloned().unwrap_or_default()
            });
            let examples: &[Example] = match lang.as_str() {
                "train" => &bundle.split.train,
                "dev" => &bundle.split.dev,
                l => bundle
                    .split
                    .test
                    .get(l)
                    .ok_or_else(|| CliError::Data(format!("bundle has no test split for `{l}`")))?,
            };
            examples.iter().map(|e| (e.id.clone(), e.annotation.clone())).collect()
        }
        (None, Some(p)) => {
            add_input(m, p)?;
            read_conllu_documents(&read_text(p)?)?
                .into_iter()
                .enumerate()
                .map(|(i, (id, s))| (id.unwrap_or_else(|| format!("s{i:04}")), s))
                .collect()
        }
        (None, None) => return Err(CliError::Config("pass --data/--lang or --conllu".into())),
    };
    let outputs = worker_pool(a.workers)?.install(|| {
        sentences
            .par_iter()
            .map(|(id, s)| parser.parse(s).map(|o| (id.clone(), o)))
            .collect::<Result<Vec<_>, DecoderError>>()
    })?;
    fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    let mut truncated = 0;
    for (id, o) in &outputs {
        write_text(&a.out.join(format!("{id}.seq")), &format!("{}\n", o.sequence.tokens.join(" ")))?;
        write_text(&a.out.join(format!("{id}.clf")), &write_clauses(&o.drs))?;
        truncated += o.truncated as usize;
        if ctx.json {
            ctx.record(&json!({"id": id, "sequence": o.sequence.tokens.join(" "), "truncated": o.truncated, "copies": o.decoded.copies()}));
        }
    }
    if !ctx.json {
        ctx.line(format!("parsed {} sentences ({} truncated) -> {}", outputs.len(), truncated, a.out.display()));
    }
    Ok(EXIT_OK)
}

fn read_structures(p: &Path) -> Result<BTreeMap<String, Drs>, CliError> {
    let parse = |f: &Path| -> Result<Drs, CliError> {
        parse_clause_document(&read_text(f)?)
            .map(|d| d.drs)
            .map_err(|e: DrsError| CliError::Data(format!("{}: {e}", f.display())))
    };
    let mut out = BTreeMap::new();
    if p.is_dir() {
        let mut files = Vec::new();
        collect_files(p, &mut files).map_err(io_err(p))?;
        for f in files.into_iter().filter(|f| f.extension().is_some_and(|e| e == "clf")) {
            let key = f.strip_prefix(p).unwrap_or(&f).with_extension("").to_string_lossy().into_owned();
            out.insert(key, parse(&f)?);
        }
    } else {
        out.insert(String::new(), parse(p)?);
    }
    Ok(out)
}

fn cmd_evaluate(a: &EvalArgs, ctx: &mut Ctx, m: &mut RunManifest, analyze: bool) -> Result<i32, CliError> {
    for p in [&a.pred, &a.gold].into_iter().chain(&a.conllu).chain(&a.non_lexical) {
        add_input(m, p)?;
    }
    m.seed = Some(a.seed);
    let pred = read_structures(&a.pred)?;
    let gold = read_structures(&a.gold)?;
    let pairs: Vec<(&Drs, &Drs)> = if a.pred.is_dir() != a.gold.is_dir() {
        return Err(CliError::Data("--pred and --gold must both be files or both be directories".into()));
    } else {
        let mut v = Vec::new();
        for (k, g) in &gold {
            let p = pred
                .get(k)
                .ok_or_else(|| CliError::Data(format!("no prediction for `{k}`")))?;
            v.push((p, g));
        }
        v
    };
    let mut non_lexical = NonLexical::default();
    if let Some(p) = &a.non_lexical {
        for l in read_text(p)?.lines().map(str::trim).filter(|l| !l.is_empty()) {
            non_lexical.insert(l);
        }
    }
    let mut lemmas = Vec::new();
    if let Some(p) = &a.conllu {
        for (_, s) in read_conllu_documents(&read_text(p)?)? {
            lemmas.extend(s.lemmas);
        }
    }
    let lexicon = lexicon_for(non_lexical, lemmas);
    let cfg = AlignConfig {
        restarts: a.restarts,
        seed: a.seed,
        ..AlignConfig::default()
    };
    let scores = worker_pool(a.workers)?.install(|| {
        pairs
            .par_iter()
            .map(|(p, g)| score(p, g, &lexicon, &cfg))
            .collect::<Vec<_>>()
    });
    let total = scores.iter().fold(Evaluation::default(), |mut acc, e| {
        acc.merge(e);
        acc
    });
    if analyze {
        if ctx.json {
            for c in Category::ALL {
                let r = total.categories.get(&c).copied().unwrap_or_default();
                ctx.record(&Record::new(&a.name, &a.language, c.name(), &r));
            }
        } else {
            let rows: Vec<(String, Vec<Option<_>>)> = Category::ALL
                .iter()
                .map(|c| (c.name().to_string(), vec![Some(total.categories.get(c).copied().unwrap_or_default())]))
                .collect();
            ctx.line(render_table("category", &rows, std::slice::from_ref(&a.language)).trim_end());
        }
    } else if ctx.json {
        ctx.record(&Record::new(&a.name, &a.language, "all", &total.overall));
    } else {
        let r = total.overall;
        ctx.line(format!("documents {}", pairs.len()));
        ctx.line(format!("matched {} predicted {} gold {}", r.matched, r.n_predicted, r.n_gold));
        ctx.line(format!("P {:.3}  R {:.3}  F1 {:.3}", r.precision(), r.recall(), r.f1()));
    }
    Ok(EXIT_OK)
}

fn cmd_gradcheck(ctx: &mut Ctx) -> Result<i32, CliError> {
    let suite = run_suite();
    for m in &suite {
        if ctx.json {
            ctx.record(m);
        } else {
            ctx.line(format!(
                "{:<13} {}  max rel {:.2e}  ({} entries, tolerance {:.0e})",
                m.module,
                if m.passed { "PASS" } else { "FAIL" },
                m.report.max_rel_error,
                m.report.checked,
                GRADCHECK_TOLERANCE
            ));
        }
    }
    Ok(if suite.iter().all(|m| m.passed) { EXIT_OK } else { EXIT_NUMERIC })
}
