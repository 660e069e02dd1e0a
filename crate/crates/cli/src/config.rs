//! Flat `key=value` run configuration shared by all subcommands.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use uglseg::ptrain::{Mode, TrainConfig};
use uglseg::transfer::TransferConfig;

/// Every setting a subcommand may read. Defaults: `m = 16`, `k = 5`,
/// `α = 0.01`, `d = 100`, bigram cutoff 3.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub high: Option<PathBuf>,
    pub low: Option<PathBuf>,
    pub teacher: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub history: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub dim: usize,
    pub window: usize,
    pub filter: usize,
    pub bigrams: bool,
    pub bigram_min_count: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub teacher_epochs: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Worker count; `None` means 1 in serial mode and all cores otherwise.
    pub threads: Option<usize>,
    pub clip: Option<f64>,
    pub mix: f64,
    pub modes: Vec<Mode>,
    pub threads_list: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            dev: None,
            high: None,
            low: None,
            teacher: None,
            model: None,
            input: None,
            output: None,
            history: None,
            embeddings: None,
            dim: 100,
            window: 5,
            filter: 2,
            bigrams: true,
            bigram_min_count: 3,
            batch_size: 16,
            lr: 0.01,
            epochs: 10,
            teacher_epochs: 10,
            seed: 0,
            mode: Mode::Serial,
            threads: None,
            clip: Some(5.0),
            mix: 0.5,
            modes: vec![Mode::Serial, Mode::Sync, Mode::Async],
            threads_list: vec![1, 2, 4],
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value `{value}` for `{key}`"))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, String> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let path = || Some(PathBuf::from(value));
        match key {
            "corpus" => self.corpus = path(),
            "dev" => self.dev = path(),
            "high" => self.high = path(),
            "low" => self.low = path(),
            "teacher" => self.teacher = path(),
            "model" => self.model = path(),
            "input" => self.input = path(),
            "output" => self.output = path(),
            "history" => self.history = path(),
            "embeddings" => self.embeddings = path(),
            "dim" => self.dim = parse(key, value)?,
            "window" => self.window = parse(key, value)?,
            "filter" => self.filter = parse(key, value)?,
            "bigrams" => self.bigrams = parse(key, value)?,
            "bigram_min_count" => self.bigram_min_count = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "teacher_epochs" => self.teacher_epochs = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "mode" => self.mode = parse(key, value)?,
            "threads" => self.threads = Some(parse(key, value)?),
            "clip" => self.clip = if value == "none" { None } else { Some(parse(key, value)?) },
            "mix" => self.mix = parse(key, value)?,
            "modes" => self.modes = parse_list(key, value)?,
            "threads_list" => self.threads_list = parse_list(key, value)?,
            _ => return Err(format!("unknown configuration key `{key}`")),
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are ignored.
    /// Returns the keys that were set.
    pub fn apply_text(&mut self, text: &str) -> Result<BTreeSet<String>, String> {
        let mut keys = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
            let k = k.trim();
            self.set(k, v.trim()).map_err(|e| format!("config line {}: {e}", i + 1))?;
            keys.insert(k.to_string());
        }
        Ok(keys)
    }

    pub fn from_text(text: &str) -> Result<Self, String> {
        let mut c = RunConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Every effective setting, one `key=value` per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let paths = [
            ("corpus", &self.corpus),
            ("dev", &self.dev),
            ("high", &self.high),
            ("low", &self.low),
            ("teacher", &self.teacher),
            ("model", &self.model),
            ("input", &self.input),
            ("output", &self.output),
            ("history", &self.history),
            ("embeddings", &self.embeddings),
        ];
        for (k, p) in paths {
            if let Some(p) = p {
                let _ = writeln!(s, "{k}={}", p.display());
            }
        }
        let _ = writeln!(s, "dim={}", self.dim);
        let _ = writeln!(s, "window={}", self.window);
        let _ = writeln!(s, "filter={}", self.filter);
        let _ = writeln!(s, "bigrams={}", self.bigrams);
        let _ = writeln!(s, "bigram_min_count={}", self.bigram_min_count);
        let _ = writeln!(s, "batch_size={}", self.batch_size);
        let _ = writeln!(s, "lr={}", self.lr);
        let _ = writeln!(s, "epochs={}", self.epochs);
        let _ = writeln!(s, "teacher_epochs={}", self.teacher_epochs);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "mode={}", self.mode);
        if let Some(t) = self.threads {
            let _ = writeln!(s, "threads={t}");
        }
        match self.clip {
            Some(c) => {
                let _ = writeln!(s, "clip={c}");
            }
            None => s.push_str("clip=none\n"),
        }
        let _ = writeln!(s, "mix={}", self.mix);
        let _ = writeln!(s, "modes={}", join(&self.modes));
        let _ = writeln!(s, "threads_list={}", join(&self.threads_list));
        s
    }

    /// Worker count after applying the mode-dependent default.
    pub fn workers(&self) -> usize {
        match (self.threads, self.mode) {
            (Some(t), _) => t,
            (None, Mode::Serial) => 1,
            (None, _) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            mode: self.mode,
            workers: self.workers(),
            epochs: self.epochs,
            seed: self.seed,
            lr: self.lr,
            clip: self.clip,
        }
    }

    pub fn teacher_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.teacher_epochs,
            ..self.train_config()
        }
    }

    pub fn transfer_config(&self) -> TransferConfig {
        TransferConfig {
            base_lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            mix: self.mix,
            seed: self.seed,
            clip: self.clip,
            bigram_min_count: self.bigram_min_count,
        }
    }
}
