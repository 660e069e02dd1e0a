//! Subcommands of the `uglseg` binary: train, transfer, predict, score and
//! bench.

pub mod config;

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use uglseg::corpus::{load_embeddings, read_bakeoff, SegmentedSentence, Vocab};
use uglseg::model::UglModel;
use uglseg::ptrain::{self, Mode};
use uglseg::transfer::{self, history_table};
use uglseg::Error;

pub use config::RunConfig;

const DEFAULT_MODEL: &str = "model.ugl";

#[derive(Debug, Parser)]
#[command(name = "uglseg", version, about = "Neural Chinese word segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a segmenter on a Bakeoff-format corpus.
    Train(TrainArgs),
    /// Train a student on a low-resource corpus from a high-resource teacher.
    Transfer(TransferArgs),
    /// Segment raw text, one sentence per line.
    Predict(PredictArgs),
    /// Score a segmentation against gold.
    Score(ScoreArgs),
    /// Compare epoch time and final F across training modes.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Read settings from a key=value file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the effective settings as a key=value file.
    #[arg(long)]
    pub save_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Embedding and hidden dimension d [default: 100]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Context window k, odd [default: 5]
    #[arg(long)]
    pub window: Option<usize>,
    /// Filter width f of the encoder cell [default: 2]
    #[arg(long)]
    pub filter: Option<usize>,
    /// Use bigram features [default: true]
    #[arg(long)]
    pub bigrams: Option<bool>,
    /// Minimum corpus count of a kept bigram [default: 3]
    #[arg(long)]
    pub bigram_min_count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OptimArgs {
    /// Mini-batch size m [default: 16]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam learning rate α [default: 0.01]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Training epochs [default: 10]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Random seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Global gradient-norm clip, or `none` [default: 5]
    #[arg(long)]
    pub clip: Option<String>,
    /// Training mode: serial, sync or async [default: serial]
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Worker threads [default: 1 in serial mode, all cores otherwise]
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training corpus
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Dev corpus scored after training
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Output model file [default: model.ugl]
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Pretrained character embeddings in word2vec text format
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[command(flatten)]
    pub model_args: ModelArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    /// High-resource corpus
    #[arg(long)]
    pub high: Option<PathBuf>,
    /// Low-resource corpus
    #[arg(long)]
    pub low: Option<PathBuf>,
    /// Teacher model; trained on the high-resource corpus when omitted
    #[arg(long)]
    pub teacher: Option<PathBuf>,
    /// Low-resource dev corpus scored after training
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Output student model [default: model.ugl]
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output file for the similarity history table [default: stdout]
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Fraction of each mini-batch drawn from the high-resource corpus [default: 0.5]
    #[arg(long)]
    pub mix: Option<f64>,
    /// Epochs of teacher training [default: 10]
    #[arg(long)]
    pub teacher_epochs: Option<usize>,
    #[command(flatten)]
    pub model_args: ModelArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file
    #[arg(long)]
    pub model: PathBuf,
    /// Raw text, one sentence per line; spaces are ignored
    #[arg(long)]
    pub input: PathBuf,
    /// Output file [default: stdout]
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Vocabulary file that must match the model's vocabulary
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Gold segmentation
    #[arg(long)]
    pub gold: PathBuf,
    /// Predicted segmentation
    #[arg(long)]
    pub pred: PathBuf,
    /// Print a tab-separated table instead of percentages
    #[arg(long)]
    pub tsv: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Training corpus
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Dev corpus for the final F [default: the training corpus]
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Comma-separated modes [default: serial,sync,async]
    #[arg(long)]
    pub modes: Option<String>,
    /// Comma-separated thread counts for parallel modes [default: 1,2,4]
    #[arg(long)]
    pub threads_list: Option<String>,
    #[command(flatten)]
    pub model_args: ModelArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// A failed command with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Io(_) => EXIT_USAGE,
            Error::NonFiniteGradient { .. } | Error::NonFiniteLoss { .. } | Error::NonFinite(_) => EXIT_NUMERIC,
            _ => EXIT_DATA,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::usage(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn push<T: ToString>(out: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<T>) {
    if let Some(v) = v {
        out.push((key, v.to_string()));
    }
}

fn push_path(out: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<PathBuf>) {
    push(out, key, &v.as_ref().map(|p| p.display().to_string()));
}

impl ModelArgs {
    fn overrides(&self, out: &mut Vec<(&'static str, String)>) {
        push(out, "dim", &self.dim);
        push(out, "window", &self.window);
        push(out, "filter", &self.filter);
        push(out, "bigrams", &self.bigrams);
        push(out, "bigram_min_count", &self.bigram_min_count);
    }
}

impl OptimArgs {
    fn overrides(&self, out: &mut Vec<(&'static str, String)>) {
        push(out, "batch_size", &self.batch_size);
        push(out, "lr", &self.lr);
        push(out, "epochs", &self.epochs);
        push(out, "seed", &self.seed);
        push(out, "clip", &self.clip);
        push(out, "mode", &self.mode);
        push(out, "threads", &self.threads);
    }
}

/// Defaults, then the config file, then flags. Returns the effective
/// configuration and the keys set explicitly.
fn resolve(cfg: &ConfigArgs, overrides: &[(&'static str, String)]) -> Result<(RunConfig, BTreeSet<String>)> {
    let mut run = RunConfig::default();
    let mut explicit = BTreeSet::new();
    if let Some(path) = &cfg.config {
        let text = read_text(path)?;
        explicit = run.apply_text(&text).map_err(CliError::usage)?;
    }
    for (k, v) in overrides {
        run.set(k, v).map_err(CliError::usage)?;
        explicit.insert(k.to_string());
    }
    if let Some(path) = &cfg.save_config {
        write_file(path, &run.to_text())?;
    }
    Ok((run, explicit))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_bytes(path)?).map_err(|_| CliError::data(format!("{}: invalid UTF-8", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

fn read_corpus(path: &Path) -> Result<Vec<SegmentedSentence>> {
    let corpus = read_bakeoff(&read_bytes(path)?).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    if corpus.is_empty() {
        return Err(CliError::data(format!("{}: no sentences", path.display())));
    }
    Ok(corpus)
}

/// 1-based line numbers of the non-blank lines, which are the lines that
/// carry sentences.
fn sentence_lines(bytes: &[u8]) -> Vec<usize> {
    bytes
        .split(|&b| b == b'\n')
        .enumerate()
        .filter(|(_, l)| l.iter().any(|b| !b.is_ascii_whitespace()))
        .map(|(i, _)| i + 1)
        .collect()
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| CliError::usage(format!("--{flag} is required")))
}

fn model_path(run: &RunConfig) -> PathBuf {
    run.model.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_MODEL))
}

/// Runs one parsed command, writing reports to `out`.
pub fn run(cli: Cli, out: &mut impl Write) -> Result<()> {
    match cli.command {
        Command::Train(a) => cmd_train(a, out),
        Command::Transfer(a) => cmd_transfer(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Score(a) => cmd_score(a, out),
        Command::Bench(a) => cmd_bench(a, out),
    }
}

fn cmd_train(a: TrainArgs, out: &mut impl Write) -> Result<()> {
    let mut ov = Vec::new();
    push_path(&mut ov, "corpus", &a.corpus);
    push_path(&mut ov, "dev", &a.dev);
    push_path(&mut ov, "model", &a.model);
    push_path(&mut ov, "embeddings", &a.embeddings);
    a.model_args.overrides(&mut ov);
    a.optim.overrides(&mut ov);
    let (run, _) = resolve(&a.config, &ov)?;
    let tc = run.train_config();
    tc.validate()?;
    let corpus = read_corpus(required(&run.corpus, "corpus")?)?;
    let dev = run.dev.as_deref().map(read_corpus).transpose()?;
    let vocab = transfer::joint_vocab(&corpus, &[], run.bigram_min_count)?;
    let mut model = UglModel::new(vocab, run.dim, run.window, run.filter, run.bigrams, run.seed)?;
    if let Some(path) = &run.embeddings {
        let table = load_embeddings(&read_text(path)?, &model.vocab, run.dim, run.seed)?;
        model.set_char_embeddings(table)?;
    }
    let report = ptrain::train(&mut model, &corpus, dev.as_deref(), &tc)?;
    writeln!(out, "epoch\tloss\tseconds")?;
    for (i, e) in report.epochs.iter().enumerate() {
        writeln!(out, "{}\t{:.6}\t{:.3}", i + 1, e.loss, e.seconds)?;
    }
    if let Some(f) = report.dev_f {
        writeln!(out, "dev_F\t{f:.4}")?;
    }
    model.save(model_path(&run))?;
    Ok(())
}

fn cmd_transfer(a: TransferArgs, out: &mut impl Write) -> Result<()> {
    let mut ov = Vec::new();
    push_path(&mut ov, "high", &a.high);
    push_path(&mut ov, "low", &a.low);
    push_path(&mut ov, "teacher", &a.teacher);
    push_path(&mut ov, "dev", &a.dev);
    push_path(&mut ov, "model", &a.model);
    push_path(&mut ov, "history", &a.history);
    push(&mut ov, "mix", &a.mix);
    push(&mut ov, "teacher_epochs", &a.teacher_epochs);
    a.model_args.overrides(&mut ov);
    a.optim.overrides(&mut ov);
    let (mut run, explicit) = resolve(&a.config, &ov)?;
    let tcfg = run.transfer_config();
    tcfg.validate()?;
    let high = read_corpus(required(&run.high, "high")?)?;
    let low = read_corpus(required(&run.low, "low")?)?;
    let dev = run.dev.as_deref().map(read_corpus).transpose()?;
    let teacher = match &run.teacher {
        Some(path) => {
            let t = UglModel::load(path)?;
            let c = t.config();
            // the student takes the teacher's architecture unless set explicitly
            let arch = ["dim", "window", "filter", "bigrams"];
            if !arch.iter().any(|k| explicit.contains(*k)) {
                (run.dim, run.window, run.filter, run.bigrams) = (c.dim, c.window, c.filter, c.use_bigrams);
            }
            transfer::check_compatible(&t, run.dim, run.window, run.filter, run.bigrams)?;
            t
        }
        None => {
            let tc = run.teacher_config();
            tc.validate()?;
            transfer::train_teacher(&high, run.dim, run.window, run.filter, run.bigrams, &tc, run.bigram_min_count)?.0
        }
    };
    let vocab = transfer::joint_vocab(&high, &low, run.bigram_min_count)?;
    let student = transfer::init_student(&teacher, vocab, run.seed)?;
    let outcome = transfer::train_transfer(student, &high, &low, &tcfg, None)?;
    let table = history_table(&outcome.history);
    match &run.history {
        Some(path) => write_file(path, &table)?,
        None => out.write_all(table.as_bytes())?,
    }
    if let Some(dev) = dev {
        writeln!(out, "dev_F\t{:.4}", outcome.model.evaluate(&dev)?.f1)?;
    }
    outcome.model.save(model_path(&run))?;
    Ok(())
}

fn cmd_predict(a: PredictArgs, out: &mut impl Write) -> Result<()> {
    let model = UglModel::load(&a.model).map_err(|e| match e {
        Error::Io(io) => CliError::usage(format!("cannot read {}: {io}", a.model.display())),
        e => CliError::data(format!("{}: {e}", a.model.display())),
    })?;
    if let Some(path) = &a.vocab {
        let vocab = Vocab::from_text(&read_text(path)?)?;
        let (want, got) = (model.vocab.content_hash(), vocab.content_hash());
        if want != got {
            return Err(CliError::data(format!(
                "vocabulary {} (hash {got}) does not match the model's vocabulary (hash {want})",
                path.display()
            )));
        }
    }
    let bytes = read_bytes(&a.input)?;
    let mut text = String::new();
    for (i, line) in bytes.split(|&b| b == b'\n').enumerate() {
        let line = std::str::from_utf8(line)
            .map_err(|_| CliError::data(format!("{} line {}: invalid UTF-8", a.input.display(), i + 1)))?;
        if i > 0 {
            text.push('\n');
        }
        let seg = model.segment(line);
        if !seg.words.is_empty() {
            text.push_str(&seg.to_string());
        }
    }
    match &a.output {
        Some(path) => write_file(path, &text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_score(a: ScoreArgs, out: &mut impl Write) -> Result<()> {
    let gold_bytes = read_bytes(&a.gold)?;
    let gold = read_bakeoff(&gold_bytes).map_err(|e| CliError::data(format!("{}: {e}", a.gold.display())))?;
    let pred = read_bakeoff(&read_bytes(&a.pred)?).map_err(|e| CliError::data(format!("{}: {e}", a.pred.display())))?;
    let report = uglseg::eval::score(&gold, &pred).map_err(|e| match e {
        Error::Alignment { sentence } => {
            let place = match sentence_lines(&gold_bytes).get(sentence) {
                Some(line) => format!("line {line} of {}", a.gold.display()),
                None => format!("end of {}", a.gold.display()),
            };
            CliError::data(format!(
                "gold and prediction differ in their characters at {place} (sentence {})",
                sentence + 1
            ))
        }
        e => e.into(),
    })?;
    if a.tsv {
        writeln!(out, "precision\trecall\tf1\tgold_words\tpred_words\tcorrect_words")?;
        writeln!(out, "{}", report.to_tsv())?;
    } else {
        writeln!(
            out,
            "{:.1} {:.1} {:.1}",
            report.precision * 100.0,
            report.recall * 100.0,
            report.f1 * 100.0
        )?;
        writeln!(
            out,
            "gold {} pred {} correct {}",
            report.gold_words, report.pred_words, report.correct_words
        )?;
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs, out: &mut impl Write) -> Result<()> {
    let mut ov = Vec::new();
    push_path(&mut ov, "corpus", &a.corpus);
    push_path(&mut ov, "dev", &a.dev);
    push(&mut ov, "modes", &a.modes);
    push(&mut ov, "threads_list", &a.threads_list);
    a.model_args.overrides(&mut ov);
    a.optim.overrides(&mut ov);
    let (run, _) = resolve(&a.config, &ov)?;
    if run.threads_list.contains(&0) {
        return Err(CliError::usage("thread counts must be positive"));
    }
    let corpus = read_corpus(required(&run.corpus, "corpus")?)?;
    let dev = match &run.dev {
        Some(p) => read_corpus(p)?,
        None => corpus.clone(),
    };
    let vocab = transfer::joint_vocab(&corpus, &[], run.bigram_min_count)?;
    let init = UglModel::new(vocab, run.dim, run.window, run.filter, run.bigrams, run.seed)?;
    let base = ptrain::TrainConfig {
        mode: Mode::Serial,
        workers: 1,
        ..run.train_config()
    };
    let rows = ptrain::benchmark(&init, &corpus, &dev, &ptrain::bench_runs(&run.modes, &run.threads_list), &base)?;
    out.write_all(ptrain::bench_table(&rows).as_bytes())?;
    Ok(())
}
