//! Mini-batch Adam training in serial, synchronous-parallel and lock-free
//! asynchronous-parallel modes.
//!
//! Serial mode takes one Adam step per mini-batch. Sync mode splits each
//! batch into `P` shards, computes shard gradients on `P` threads, sums them
//! in shard order and divides by the number of non-empty shards before a
//! single step. Async mode puts every shard of an epoch on a shared queue;
//! each worker pulls a shard, reads a racy snapshot of the shared values,
//! and applies its own Adam update (private moments) straight to the shared
//! store without locks. Async workers use a learning rate of `lr / P`:
//! `P` workers take `P` times as many steps per epoch, each on a shard of
//! `m / P` sentences, so the parameters travel about as far per epoch as in
//! serial mode, and `P = 1` stays identical to serial mode.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Instant;

use rand::seq::SliceRandom;

use crate::corpus::SegmentedSentence;
use crate::error::{Error, Result};
use crate::model::{EncodedSentence, Network, UglModel};
use crate::nn::{rng, AdamHyper, AdamMoments, GradSet, ParamRead, ParamStore, SharedParams};

const SHUFFLE_STREAM: u64 = 0x5348_5546;

pub const DEFAULT_BATCH_SIZE: usize = 16;
pub const DEFAULT_CLIP: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Serial,
    Sync,
    Async,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Serial => "serial",
            Mode::Sync => "sync",
            Mode::Async => "async",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "serial" => Ok(Mode::Serial),
            "sync" => Ok(Mode::Sync),
            "async" => Ok(Mode::Async),
            _ => Err(Error::Config(format!("unknown mode `{s}` (serial, sync, async)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub mode: Mode,
    pub workers: usize,
    pub epochs: usize,
    pub seed: u64,
    pub lr: f64,
    /// Global-norm gradient clip; `None` disables clipping.
    pub clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: DEFAULT_BATCH_SIZE,
            mode: Mode::Serial,
            workers: 1,
            epochs: 10,
            seed: 0,
            lr: 0.01,
            clip: Some(DEFAULT_CLIP),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        if self.mode == Mode::Serial && self.workers != 1 {
            return Err(Error::Config("serial mode runs exactly one worker".into()));
        }
        if matches!(self.clip, Some(c) if c.is_nan() || c <= 0.0) {
            return Err(Error::Config("clip norm must be positive".into()));
        }
        self.hyper().validate()
    }

    pub fn hyper(&self) -> AdamHyper {
        AdamHyper::default().with_lr(self.lr)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    /// Mean sentence loss over the epoch.
    pub loss: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub mode: Mode,
    pub workers: usize,
    pub epochs: Vec<EpochStats>,
    /// Word F1 on the dev set after the last epoch, when one was given.
    pub dev_f: Option<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.loss)
    }

    pub fn mean_epoch_seconds(&self) -> f64 {
        if self.epochs.is_empty() {
            return 0.0;
        }
        self.epochs.iter().map(|e| e.seconds).sum::<f64>() / self.epochs.len() as f64
    }

    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.loss).collect()
    }
}

/// Splits a batch into `p` contiguous shards whose sizes differ by at most
/// one, larger shards first.
pub fn shard_minibatch<T>(batch: &[T], p: usize) -> Vec<&[T]> {
    let p = p.max(1);
    let (base, extra) = (batch.len() / p, batch.len() % p);
    let mut out = Vec::with_capacity(p);
    let mut start = 0;
    for i in 0..p {
        let len = base + usize::from(i < extra);
        out.push(&batch[start..start + len]);
        start += len;
    }
    out
}

/// Sentence order for one epoch.
pub fn epoch_order(seed: u64, epoch: usize, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed ^ SHUFFLE_STREAM, epoch as u64));
    order
}

/// Loss and clipped gradient of the mean loss over `batch`, with the
/// finiteness checks every mode shares.
pub fn batch_gradient(
    net: &Network,
    params: &impl ParamRead,
    batch: &[&EncodedSentence],
    clip: Option<f64>,
    batch_index: usize,
) -> Result<(f64, GradSet)> {
    let (loss, mut grads) = net.batch_loss_and_grad(params, batch);
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { batch: batch_index });
    }
    if let Some(id) = grads.first_non_finite() {
        return Err(Error::NonFiniteGradient {
            name: net.param_names().nth(id).unwrap_or("?").to_string(),
        });
    }
    if let Some(c) = clip {
        grads.clip_global_norm(c);
    }
    Ok((loss, grads))
}

/// Trains `store` in place on already encoded sentences.
pub fn train_network(net: &Network, store: &mut ParamStore, data: &[EncodedSentence], cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Config("training corpus is empty".into()));
    }
    net.check_store(store)?;
    let mut report = TrainReport {
        mode: cfg.mode,
        workers: cfg.workers,
        epochs: Vec::with_capacity(cfg.epochs),
        dev_f: None,
    };
    let mut worker_moments: Vec<AdamMoments> = Vec::new();
    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        let order = epoch_order(cfg.seed, epoch, data.len());
        let batches: Vec<Vec<&EncodedSentence>> = order
            .chunks(cfg.batch_size)
            .map(|c| c.iter().map(|&i| &data[i]).collect())
            .collect();
        let total = match cfg.mode {
            Mode::Serial => serial_epoch(net, store, &batches, cfg)?,
            Mode::Sync => sync_epoch(net, store, &batches, cfg)?,
            Mode::Async => {
                if worker_moments.is_empty() {
                    worker_moments = vec![store.moments().clone(); cfg.workers];
                }
                async_epoch(net, store, &batches, cfg, &mut worker_moments)?
            }
        };
        report.epochs.push(EpochStats {
            loss: total / data.len() as f64,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(report)
}

fn serial_epoch(net: &Network, store: &mut ParamStore, batches: &[Vec<&EncodedSentence>], cfg: &TrainConfig) -> Result<f64> {
    let h = cfg.hyper();
    let mut total = 0.0;
    for (b, batch) in batches.iter().enumerate() {
        let (loss, grads) = batch_gradient(net, store, batch, cfg.clip, b)?;
        store.adam_step(&grads, &h)?;
        total += loss * batch.len() as f64;
    }
    Ok(total)
}

fn sync_epoch(net: &Network, store: &mut ParamStore, batches: &[Vec<&EncodedSentence>], cfg: &TrainConfig) -> Result<f64> {
    let h = cfg.hyper();
    let mut total = 0.0;
    for (b, batch) in batches.iter().enumerate() {
        let shards: Vec<&[&EncodedSentence]> =
            shard_minibatch(batch, cfg.workers).into_iter().filter(|s| !s.is_empty()).collect();
        let params: &ParamStore = store;
        let results: Vec<Result<(f64, GradSet)>> = std::thread::scope(|scope| {
            let handles: Vec<_> = shards
                .iter()
                .map(|shard| scope.spawn(move || batch_gradient(net, params, shard, None, b)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("gradient worker panicked")).collect()
        });
        let mut sum = store.grad_set();
        for (shard, r) in shards.iter().zip(results) {
            let (loss, g) = r?;
            sum.add_scaled(&g, 1.0);
            total += loss * shard.len() as f64;
        }
        sum.scale(1.0 / shards.len() as f64);
        if let Some(c) = cfg.clip {
            sum.clip_global_norm(c);
        }
        store.adam_step(&sum, &h)?;
    }
    Ok(total)
}

fn async_epoch(
    net: &Network,
    store: &mut ParamStore,
    batches: &[Vec<&EncodedSentence>],
    cfg: &TrainConfig,
    moments: &mut [AdamMoments],
) -> Result<f64> {
    let h = cfg.hyper().with_lr(cfg.lr / cfg.workers as f64);
    let queue: Vec<(usize, &[&EncodedSentence])> = batches
        .iter()
        .enumerate()
        .flat_map(|(b, batch)| shard_minibatch(batch, cfg.workers).into_iter().map(move |s| (b, s)))
        .filter(|(_, s)| !s.is_empty())
        .collect();
    let shared = SharedParams::from_store(store);
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let results: Vec<Result<f64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = moments
            .iter_mut()
            .map(|m| {
                let (shared, next, abort, queue) = (&shared, &next, &abort, &queue);
                scope.spawn(move || -> Result<f64> {
                    let mut total = 0.0;
                    let mut writer = shared.writer();
                    while !abort.load(Ordering::Relaxed) {
                        let Some(&(b, shard)) = queue.get(next.fetch_add(1, Ordering::Relaxed)) else {
                            break;
                        };
                        let snap = shared.snapshot(&net.embedding_rows(shard));
                        match batch_gradient(net, &snap, shard, cfg.clip, b) {
                            Ok((loss, grads)) => {
                                m.apply(&mut writer, &grads, &h);
                                total += loss * shard.len() as f64;
                            }
                            Err(e) => {
                                abort.store(true, Ordering::Relaxed);
                                return Err(e);
                            }
                        }
                    }
                    Ok(total)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("async worker panicked")).collect()
    });
    shared.write_back(store);
    store.set_moments(moments[0].clone());
    let mut total = 0.0;
    for r in results {
        total += r?;
    }
    Ok(total)
}

/// Trains a model on a gold corpus; scores `dev` afterwards if given.
pub fn train(
    model: &mut UglModel,
    corpus: &[SegmentedSentence],
    dev: Option<&[SegmentedSentence]>,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    let data = model.encode_corpus(corpus)?;
    let mut report = train_network(&model.net, &mut model.params, &data, cfg)?;
    if let Some(dev) = dev {
        report.dev_f = Some(model.evaluate(dev)?.f1);
    }
    Ok(report)
}

/// One benchmark measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub mode: Mode,
    pub threads: usize,
    pub epoch_seconds: f64,
    pub final_f: f64,
}

/// Trains a fresh copy of `init` once per `(mode, threads)` and records the
/// mean epoch time and the final F on `dev`.
pub fn benchmark(
    init: &UglModel,
    corpus: &[SegmentedSentence],
    dev: &[SegmentedSentence],
    runs: &[(Mode, usize)],
    base: &TrainConfig,
) -> Result<Vec<BenchRow>> {
    let data = init.encode_corpus(corpus)?;
    runs.iter()
        .map(|&(mode, threads)| {
            let cfg = TrainConfig {
                mode,
                workers: threads,
                ..base.clone()
            };
            let mut model = init.clone();
            let report = train_network(&model.net, &mut model.params, &data, &cfg)?;
            Ok(BenchRow {
                mode,
                threads,
                epoch_seconds: report.mean_epoch_seconds(),
                final_f: model.evaluate(dev)?.f1,
            })
        })
        .collect()
}

/// Benchmark rows as a tab-separated table with a header line.
pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut s = String::from("mode\tthreads\tepoch_seconds\tfinal_F\n");
    for r in rows {
        s.push_str(&format!("{}\t{}\t{:.4}\t{:.4}\n", r.mode, r.threads, r.epoch_seconds, r.final_f));
    }
    s
}

/// Expands mode and thread lists into runs: serial once, every other mode
/// at each thread count.
pub fn bench_runs(modes: &[Mode], threads: &[usize]) -> Vec<(Mode, usize)> {
    let mut runs = Vec::new();
    for &m in modes {
        if m == Mode::Serial {
            runs.push((m, 1));
        } else {
            runs.extend(threads.iter().map(|&t| (m, t)));
        }
    }
    runs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocab;
    use crate::corpus::to_bmes;
    use crate::synth::toy_corpus;
    use proptest::prelude::*;

    fn sizes<T>(shards: &[&[T]]) -> Vec<usize> {
        shards.iter().map(|s| s.len()).collect()
    }

    #[test]
    fn shard_examples() {
        let v: Vec<usize> = (0..16).collect();
        assert_eq!(sizes(&shard_minibatch(&v, 4)), [4, 4, 4, 4]);
        assert_eq!(sizes(&shard_minibatch(&v[..10], 4)), [3, 3, 2, 2]);
        assert_eq!(sizes(&shard_minibatch(&v[..3], 4)), [1, 1, 1, 0]);
    }

    proptest! {
        #[test]
        fn shards_partition_the_batch(n in 0usize..60, p in 1usize..9) {
            let v: Vec<usize> = (0..n).collect();
            let shards = shard_minibatch(&v, p);
            prop_assert_eq!(shards.len(), p);
            let lens = sizes(&shards);
            prop_assert!(lens.iter().max().unwrap() - lens.iter().min().unwrap() <= 1);
            prop_assert_eq!(shards.concat(), v);
        }
    }

    #[test]
    fn mode_parsing() {
        for m in [Mode::Serial, Mode::Sync, Mode::Async] {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
        assert!("fast".parse::<Mode>().is_err());
    }

    #[test]
    fn serial_with_threads_is_rejected() {
        let cfg = TrainConfig {
            workers: 2,
            ..TrainConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    fn small_model(corpus: &[SegmentedSentence]) -> UglModel {
        let tagged: Vec<_> = corpus.iter().map(|s| to_bmes(s).unwrap()).collect();
        UglModel::new(build_vocab(&tagged, 1), 6, 3, 2, true, 1).unwrap()
    }

    fn run(mode: Mode, workers: usize, epochs: usize) -> (UglModel, TrainReport) {
        let corpus = toy_corpus(1, 12);
        let mut model = small_model(&corpus);
        let cfg = TrainConfig {
            batch_size: 4,
            mode,
            workers,
            epochs,
            seed: 3,
            ..TrainConfig::default()
        };
        let report = train(&mut model, &corpus, None, &cfg).unwrap();
        (model, report)
    }

    #[test]
    fn serial_is_reproducible() {
        let (a, ra) = run(Mode::Serial, 1, 2);
        let (b, rb) = run(Mode::Serial, 1, 2);
        assert_eq!(a.params, b.params);
        assert_eq!(ra.losses(), rb.losses());
    }

    #[test]
    fn async_single_worker_matches_serial_bitwise() {
        let (a, ra) = run(Mode::Serial, 1, 2);
        let (b, rb) = run(Mode::Async, 1, 2);
        assert_eq!(a.params.tensors(), b.params.tensors());
        assert_eq!(a.params.moments(), b.params.moments());
        assert_eq!(ra.losses(), rb.losses());
    }

    #[test]
    fn sync_single_worker_matches_serial_bitwise() {
        let (a, ra) = run(Mode::Serial, 1, 2);
        let (b, rb) = run(Mode::Sync, 1, 2);
        assert_eq!(a.params, b.params);
        assert_eq!(ra.losses(), rb.losses());
    }

    #[test]
    fn sync_is_reproducible_for_fixed_workers() {
        let (a, _) = run(Mode::Sync, 3, 1);
        let (b, _) = run(Mode::Sync, 3, 1);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn async_many_workers_stays_finite_and_learns() {
        let (_, r) = run(Mode::Async, 4, 3);
        assert!(r.losses().iter().all(|l| l.is_finite()));
        assert!(r.losses()[2] < r.losses()[0]);
    }

    #[test]
    fn non_finite_loss_names_the_batch() {
        let corpus = toy_corpus(1, 8);
        let mut model = small_model(&corpus);
        let id = model.net.layout.out_b;
        model.params.tensor_mut(id).data_mut()[0] = f64::NAN;
        let cfg = TrainConfig {
            batch_size: 4,
            epochs: 1,
            ..TrainConfig::default()
        };
        let err = train(&mut model, &corpus, None, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss { batch: 0 }), "{err}");
    }

    #[test]
    fn bench_run_expansion_and_table() {
        let runs = bench_runs(&[Mode::Serial, Mode::Async], &[1, 2, 4]);
        assert_eq!(runs, [(Mode::Serial, 1), (Mode::Async, 1), (Mode::Async, 2), (Mode::Async, 4)]);
        let rows: Vec<BenchRow> = runs
            .iter()
            .map(|&(mode, threads)| BenchRow {
                mode,
                threads,
                epoch_seconds: 1.0,
                final_f: 0.5,
            })
            .collect();
        let table = bench_table(&rows);
        assert_eq!(table.lines().count(), 5);
        assert!(table.starts_with("mode\tthreads\tepoch_seconds\tfinal_F\n"));
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let corpus = toy_corpus(1, 4);
        let mut model = small_model(&corpus);
        assert!(train(&mut model, &[], None, &TrainConfig::default()).is_err());
    }
}
