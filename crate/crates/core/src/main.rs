use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use transformcode::checkpoint::{Checkpoint, CheckpointError};
use transformcode::config::{ConfigError, Mode, RunConfig};
use transformcode::encoder::{EncoderError, EncoderParams};
use transformcode::eval::{self, CloneEvalConfig, EvalError};
use transformcode::extract::TokenSequence;
use transformcode::io::{self as tio, EmbeddingRecord, IoError, PreprocessedSample};
use transformcode::pipeline::{query_tokens, SampleError};
use transformcode::tokenizer::{train_vocab, TokenizerError, Vocabulary};
use transformcode::trainer::{PairIds, StepLog, TrainError, TrainReport, Trainer};

#[derive(Parser)]
#[command(
    name = "transformcode",
    version,
    about = "Contrastive code embeddings from AST transformations"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Global seed for augmentation and training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize, augment and extract every snippet.
    Preprocess {
        #[arg(long)]
        snippets: Option<PathBuf>,
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Learn a subword vocabulary from preprocessed samples.
    TrainTokenizer {
        #[arg(long)]
        samples: PathBuf,
    },
    /// Contrastive training; writes checkpoint.bin and train_log.jsonl.
    Train {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Labeled pairs for supervised-clone mode.
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Unit-norm embeddings for a snippet store, as JSON lines.
    Embed {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        snippets: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Clone decisions over labeled pairs; prints the metrics JSON.
    EvalClone {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Supervised classification on the samples' labels.
    TrainClassify {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// Held-out samples to report accuracy on.
        #[arg(long)]
        test_samples: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Subword precision, recall and F1 for predicted method names.
    ScoreNames {
        /// CSV with header `predicted,truth`.
        #[arg(long)]
        names: PathBuf,
    },
    /// Summarizes the artifacts found in the output directory.
    Report,
}

#[derive(Debug)]
struct Failure {
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Failure {
            kind,
            message: message.into(),
        }
    }
}

macro_rules! failure_from {
    ($($t:ty => $kind:literal),* $(,)?) => {
        $(impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::new($kind, e.to_string())
            }
        })*
    };
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let kind = match e {
            IoError::MalformedRecord { .. } => "malformed_record",
            IoError::DanglingPairId(_) => "dangling_pair_id",
            IoError::UnsupportedFormat { .. } => "unsupported_format",
            IoError::Io { .. } => "io",
        };
        Failure::new(kind, e.to_string())
    }
}

failure_from! {
    ConfigError => "config",
    TokenizerError => "tokenizer",
    CheckpointError => "checkpoint",
    TrainError => "train",
    EvalError => "eval",
    EncoderError => "encoder",
    SampleError => "sample",
    std::io::Error => "io",
    csv::Error => "csv",
    serde_json::Error => "json",
}

type CliResult<T> = Result<T, Failure>;

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
}

impl Ctx {
    fn new(common: &Common) -> CliResult<Self> {
        let mut cfg = match &common.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = common.seed.or(cfg.seed) {
            cfg.apply_seed(seed);
        }
        let out = common
            .out
            .clone()
            .or_else(|| cfg.paths.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&out)?;
        Ok(Ctx { cfg, out })
    }

    fn workers(&self, flag: Option<usize>) -> usize {
        flag.or(self.cfg.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// Prints a result line; a closed stdout is not an error.
fn emit(v: impl std::fmt::Display) {
    let _ = writeln!(std::io::stdout(), "{v}");
}

/// Pretty-prints a report. Objects get a `format_version` field.
fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut value = serde_json::to_value(value)?;
    if let Some(obj) = value.as_object_mut() {
        obj.insert("format_version".into(), json!(tio::FORMAT_VERSION));
    }
    let mut w = tio::create(path)?;
    serde_json::to_writer_pretty(&mut w, &value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = tio::create(path)?;
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn require(flag: Option<PathBuf>, fallback: &Option<PathBuf>, name: &str) -> CliResult<PathBuf> {
    flag.or_else(|| fallback.clone())
        .ok_or_else(|| Failure::new("usage", format!("--{name} is required (flag or config paths.{name})")))
}

fn load_vocab(path: &Path) -> CliResult<Vocabulary> {
    let f = std::fs::File::open(path).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))?;
    Ok(Vocabulary::read_from(std::io::BufReader::new(f))?)
}

/// Subword ids for one view, cut to the encoder's length limit.
fn model_ids(vocab: &Vocabulary, tokens: &[String], max_len: usize, id: &str) -> Vec<u32> {
    let (mut ids, skipped) = vocab.encode_lossy(tokens);
    if skipped > 0 {
        log::warn!("`{id}`: skipped {skipped} tokens with characters outside the vocabulary");
    }
    ids.truncate(max_len);
    ids
}

fn preprocess(ctx: &Ctx, snippets: Option<PathBuf>, pairs: Option<PathBuf>, workers: Option<usize>) -> CliResult<()> {
    ctx.cfg.validate()?;
    let snippets = require(snippets, &ctx.cfg.paths.snippets, "snippets")?;
    let pairs = pairs.or_else(|| ctx.cfg.paths.pairs.clone());
    let data = tio::ingest(&snippets, pairs.as_deref())?;
    let (ok, failed) = tio::preprocess(&data.snippets, &ctx.cfg.augment, ctx.workers(workers));
    for f in &failed {
        log::warn!("sample `{}` failed: {}", f.id, f.error);
    }
    tio::write_samples(&ctx.path("samples.jsonl"), &ok)?;
    write_jsonl(&ctx.path("failures.jsonl"), &failed)?;
    emit(json!({"unique_snippets": data.snippets.len(), "samples": ok.len(), "failed": failed.len()}));
    Ok(())
}

fn train_tokenizer(ctx: &Ctx, samples: &Path) -> CliResult<()> {
    let samples = tio::read_samples(samples)?;
    let corpus: Vec<TokenSequence> = samples
        .iter()
        .flat_map(|s| [s.tokens_normalized.clone(), s.tokens_anchor.clone()])
        .map(|tokens| TokenSequence {
            tokens,
            ..TokenSequence::default()
        })
        .collect();
    let vocab = train_vocab(&corpus, &ctx.cfg.tokenizer)?;
    let mut w = tio::create(&ctx.path("vocab.txt"))?;
    vocab.write_to(&mut w)?;
    w.flush()?;
    emit(json!({"vocab_size": vocab.len()}));
    Ok(())
}

struct Prepared {
    trainer: Trainer,
    data: Vec<PairIds>,
    samples: Vec<PreprocessedSample>,
    vocab: Vocabulary,
}

fn prepare_training(ctx: &Ctx, samples: &Path, vocab: &Path, epochs: Option<usize>) -> CliResult<Prepared> {
    ctx.cfg.validate()?;
    let vocab = load_vocab(vocab)?;
    let samples = tio::read_samples(samples)?;
    let enc = ctx.cfg.model.encoder(vocab.len());
    let mut train = ctx.cfg.train.clone();
    if let Some(e) = epochs {
        train.epochs = e;
    }
    let max_len = enc.max_sequence_length;
    let data: Vec<PairIds> = samples
        .iter()
        .map(|s| PairIds {
            query: model_ids(&vocab, &s.tokens_normalized, max_len, &s.id),
            key: model_ids(&vocab, &s.tokens_anchor, max_len, &s.id),
        })
        .collect();
    if let Some(i) = data.iter().position(|p| p.query.is_empty() || p.key.is_empty()) {
        return Err(Failure::new(
            "sample",
            format!("`{}` encodes to nothing", samples[i].id),
        ));
    }
    Ok(Prepared {
        trainer: Trainer::new(enc, train)?,
        data,
        samples,
        vocab,
    })
}

/// Runs the fit loop, logging every step and writing periodic checkpoints.
fn run_fit(
    ctx: &Ctx,
    trainer: &mut Trainer,
    labels: &[String],
    fit: impl FnOnce(
        &mut Trainer,
        &mut dyn FnMut(&StepLog),
        &mut dyn FnMut(usize, &Trainer),
    ) -> Result<TrainReport, TrainError>,
) -> CliResult<TrainReport> {
    let mut log = tio::create(&ctx.path("train_log.jsonl"))?;
    let mut io_err: Option<std::io::Error> = None;
    let every = trainer.cfg.checkpoint_every;
    let mut ck_err: Option<CheckpointError> = None;
    let report = {
        let mut on_step = |s: &StepLog| {
            let line = serde_json::to_string(s).expect("step log serializes");
            if let Err(e) = writeln!(log, "{line}") {
                io_err.get_or_insert(e);
            }
        };
        let mut on_epoch = |epoch: usize, t: &Trainer| {
            if every > 0 && epoch.is_multiple_of(every) {
                if let Err(e) = snapshot(t, labels).save(&ctx.path(&format!("checkpoint_epoch{epoch}.bin"))) {
                    ck_err.get_or_insert(e);
                }
            }
        };
        fit(trainer, &mut on_step, &mut on_epoch)?
    };
    if let Some(e) = io_err {
        return Err(e.into());
    }
    if let Some(e) = ck_err {
        return Err(e.into());
    }
    log.flush()?;
    snapshot(trainer, labels).save(&ctx.path("checkpoint.bin"))?;
    write_json(&ctx.path("train_report.json"), &report)?;
    Ok(report)
}

fn snapshot(t: &Trainer, labels: &[String]) -> Checkpoint {
    let mut ck = Checkpoint::new(t.query.clone());
    ck.classifier = t.classifier.clone();
    ck.alpha = t.alpha;
    ck.labels = labels.to_vec();
    ck
}

fn summary(report: &TrainReport) -> serde_json::Value {
    json!({
        "steps": report.steps,
        "final_loss": report.epoch_losses.last(),
        "collapse_warnings": report.collapse_warnings,
    })
}

fn train(
    ctx: &Ctx,
    samples: &Path,
    vocab: &Path,
    mode: Option<Mode>,
    pairs: Option<PathBuf>,
    epochs: Option<usize>,
) -> CliResult<()> {
    match mode.unwrap_or(ctx.cfg.mode) {
        Mode::Unsupervised => {
            let Prepared { mut trainer, data, .. } = prepare_training(ctx, samples, vocab, epochs)?;
            let report = run_fit(ctx, &mut trainer, &[], |t, s, e| t.fit(&data, None, s, e))?;
            emit(summary(&report));
        }
        Mode::SupervisedClone => {
            let pairs = require(pairs, &ctx.cfg.paths.pairs, "pairs")?;
            let p = prepare_training(ctx, samples, vocab, epochs)?;
            let mut trainer = p.trainer.with_clone_supervision();
            let by_id: HashMap<&str, &PairIds> =
                p.samples.iter().zip(&p.data).map(|(s, d)| (s.id.as_str(), d)).collect();
            let mut labeled = Vec::new();
            for r in tio::read_pairs(&pairs)? {
                match (by_id.get(r.id1.as_str()), by_id.get(r.id2.as_str())) {
                    (Some(a), Some(b)) => labeled.push((a.query.clone(), b.query.clone(), r.label)),
                    _ => log::warn!("pair ({}, {}) has no preprocessed sample, skipped", r.id1, r.id2),
                }
            }
            if labeled.is_empty() {
                return Err(Failure::new("usage", "no labeled pair refers to a preprocessed sample"));
            }
            let data = p.data;
            let report = run_fit(ctx, &mut trainer, &[], |t, s, e| t.fit_clone(&data, &labeled, s, e))?;
            emit(summary(&report));
        }
        Mode::SupervisedClassify => train_classify(ctx, samples, vocab, None, epochs)?,
    }
    Ok(())
}

fn train_classify(
    ctx: &Ctx,
    samples: &Path,
    vocab: &Path,
    test: Option<PathBuf>,
    epochs: Option<usize>,
) -> CliResult<()> {
    let p = prepare_training(ctx, samples, vocab, epochs)?;
    let names: Vec<String> = p
        .samples
        .iter()
        .map(|s| {
            s.label
                .clone()
                .ok_or_else(|| Failure::new("sample", format!("`{}` has no label", s.id)))
        })
        .collect::<CliResult<BTreeSet<_>>>()?
        .into_iter()
        .collect();
    if names.len() < 2 {
        return Err(Failure::new("usage", "classification needs at least two labels"));
    }
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let labels: Vec<usize> = p.samples.iter().map(|s| index[s.label.as_deref().unwrap()]).collect();
    let mut trainer = p.trainer.with_classifier(names.len());
    let data = p.data;
    let report = run_fit(ctx, &mut trainer, &names, |t, s, e| t.fit(&data, Some(&labels), s, e))?;
    let mut out = summary(&report);
    if let Some(test) = test {
        let head = trainer.classifier.as_ref().expect("classifier is set");
        let max_len = trainer.query.config.max_sequence_length;
        let (mut right, mut total) = (0usize, 0usize);
        for s in tio::read_samples(&test)? {
            let Some(truth) = s.label.as_deref().and_then(|l| index.get(l)) else {
                log::warn!("test sample `{}` has an unknown label, skipped", s.id);
                continue;
            };
            let ids = model_ids(&p.vocab, &s.tokens_normalized, max_len, &s.id);
            let probs = eval::classify_snippet(trainer.query.embed(&ids)?.view(), head)?;
            right += usize::from(eval::argmax(&probs) == *truth);
            total += 1;
        }
        let accuracy = if total == 0 { 0.0 } else { right as f64 / total as f64 };
        let m = json!({"test_samples": total, "correct": right, "accuracy": accuracy});
        write_json(&ctx.path("classify_metrics.json"), &m)?;
        out["test"] = m;
    }
    emit(out);
    Ok(())
}

fn embed(ctx: &Ctx, checkpoint: &Path, vocab: &Path, snippets: &Path, workers: Option<usize>) -> CliResult<()> {
    let ck = Checkpoint::load(checkpoint)
        .map_err(|e| Failure::new("checkpoint", format!("{}: {e}", checkpoint.display())))?;
    let vocab = load_vocab(vocab)?;
    if vocab.len() != ck.params.config.vocab_size {
        return Err(Failure::new(
            "usage",
            format!(
                "vocabulary has {} entries, checkpoint expects {}",
                vocab.len(),
                ck.params.config.vocab_size
            ),
        ));
    }
    let snippets = tio::read_snippets(snippets)?;
    let params: &EncoderParams = &ck.params;
    let max_len = params.config.max_sequence_length;
    let run = || -> Vec<Result<EmbeddingRecord, Failure>> {
        snippets
            .par_iter()
            .map(|s| {
                let seq = query_tokens(s)?;
                let ids = model_ids(&vocab, &seq.tokens, max_len, &s.id);
                let v = params.embed(&ids)?;
                Ok(EmbeddingRecord {
                    id: s.id.clone(),
                    embedding: v.to_vec(),
                })
            })
            .collect()
    };
    let results = match rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.workers(workers))
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    let mut records = Vec::new();
    let mut failed = Vec::new();
    for (s, r) in snippets.iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => {
                log::warn!("sample `{}` failed: {}", s.id, f.message);
                failed.push(json!({"id": s.id, "error": f.message}));
            }
        }
    }
    tio::write_embeddings(&ctx.path("embeddings.jsonl"), &records)?;
    emit(json!({"embedded": records.len(), "failed": failed}));
    Ok(())
}

fn eval_clone(ctx: &Ctx, embeddings: &Path, pairs: &Path, threshold: Option<f64>) -> CliResult<()> {
    let cfg = CloneEvalConfig {
        threshold: threshold.unwrap_or(ctx.cfg.eval.threshold),
    };
    let table: HashMap<String, Vec<f64>> = tio::read_embeddings(embeddings)?
        .into_iter()
        .map(|r| (r.id, r.embedding))
        .collect();
    let pairs = tio::read_pairs(pairs)?;
    let (metrics, decisions) = eval::evaluate_pairs(
        &table,
        pairs.iter().map(|p| (p.id1.as_str(), p.id2.as_str(), p.label)),
        &cfg,
    )?;
    let mut w = csv::Writer::from_writer(tio::create(&ctx.path("decisions.csv"))?);
    for d in &decisions {
        w.serialize(d)?;
    }
    w.flush()?;
    let mut out = serde_json::to_value(metrics)?;
    out["threshold"] = json!(cfg.threshold);
    write_json(&ctx.path("metrics.json"), &out)?;
    emit(out);
    Ok(())
}

#[derive(Deserialize)]
struct NameRow {
    predicted: String,
    truth: String,
}

fn score_names(ctx: &Ctx, names: &Path) -> CliResult<()> {
    let mut rdr = csv::Reader::from_path(names)?;
    let mut rows = Vec::new();
    for r in rdr.deserialize() {
        let r: NameRow = r?;
        let s = eval::subword_f1(&r.predicted, &r.truth);
        rows.push(json!({"predicted": r.predicted, "truth": r.truth, "precision": s.precision, "recall": s.recall, "f1": s.f1}));
    }
    if rows.is_empty() {
        return Err(Failure::new("usage", format!("{} has no rows", names.display())));
    }
    let mean = |k: &str| rows.iter().map(|r| r[k].as_f64().unwrap_or(0.0)).sum::<f64>() / rows.len() as f64;
    let report = json!({
        "count": rows.len(),
        "precision": mean("precision"),
        "recall": mean("recall"),
        "f1": mean("f1"),
    });
    let mut full = report.clone();
    full["rows"] = serde_json::Value::Array(rows);
    write_json(&ctx.path("names_score.json"), &full)?;
    emit(report);
    Ok(())
}

fn read_json(path: &Path) -> Option<serde_json::Value> {
    serde_json::from_str(&std::fs::read_to_string(path).ok()?).ok()
}

fn report(ctx: &Ctx) -> CliResult<()> {
    let mut r = BTreeMap::new();
    if let Ok(s) = tio::read_samples(&ctx.path("samples.jsonl")) {
        r.insert("samples", json!(s.len()));
    }
    if let Ok(v) = load_vocab(&ctx.path("vocab.txt")) {
        r.insert("vocab_size", json!(v.len()));
    }
    if let Ok(ck) = Checkpoint::load(&ctx.path("checkpoint.bin")) {
        r.insert(
            "model",
            json!({
                "config": ck.params.config,
                "parameters": ck.params.num_parameters(),
                "alpha": ck.alpha.map(|a| a.value()),
                "labels": ck.labels,
            }),
        );
    }
    for (key, file) in [
        ("training", "train_report.json"),
        ("clone_metrics", "metrics.json"),
        ("classification", "classify_metrics.json"),
    ] {
        if let Some(v) = read_json(&ctx.path(file)) {
            r.insert(key, v);
        }
    }
    if let Some(mut v) = read_json(&ctx.path("names_score.json")) {
        if let Some(o) = v.as_object_mut() {
            o.remove("rows");
        }
        r.insert("method_names", v);
    }
    if r.is_empty() {
        return Err(Failure::new(
            "usage",
            format!("nothing to report in {}", ctx.out.display()),
        ));
    }
    write_json(&ctx.path("report.json"), &r)?;
    emit(serde_json::to_string_pretty(&r)?);
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let ctx = Ctx::new(&cli.common)?;
    match cli.command {
        Command::Preprocess {
            snippets,
            pairs,
            workers,
        } => preprocess(&ctx, snippets, pairs, workers),
        Command::TrainTokenizer { samples } => train_tokenizer(&ctx, &samples),
        Command::Train {
            samples,
            vocab,
            mode,
            pairs,
            epochs,
        } => train(&ctx, &samples, &vocab, mode, pairs, epochs),
        Command::Embed {
            checkpoint,
            vocab,
            snippets,
            workers,
        } => embed(&ctx, &checkpoint, &vocab, &snippets, workers),
        Command::EvalClone {
            embeddings,
            pairs,
            threshold,
        } => eval_clone(&ctx, &embeddings, &pairs, threshold),
        Command::TrainClassify {
            samples,
            vocab,
            test_samples,
            epochs,
        } => train_classify(&ctx, &samples, &vocab, test_samples, epochs),
        Command::ScoreNames { names } => score_names(&ctx, &names),
        Command::Report => report(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = json!({"error": {"kind": "usage", "message": e.to_string()}});
            eprintln!("{err}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({"error": {"kind": f.kind, "message": f.message}}));
            ExitCode::FAILURE
        }
    }
}
