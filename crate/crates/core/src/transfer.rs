//! Teacher/student transfer with similarity-weighted high-resource data.
//!
//! A teacher trained on the high-resource corpus initializes the student.
//! The student then trains on mini-batches mixing low-resource sentences
//! (weight 1) with high-resource sentences weighted by `wᵢ`. After every
//! epoch the student's word-level precision and recall on the whole
//! high-resource set give the error rate `e = 1 − F1` and the update rate
//! `a = ½ ln((1 − e)/e)`, and every weight moves to
//! `wᵢ′ = wᵢ/(Z·mᵢ) · Σⱼ exp(a·I(yᵢⱼ = ŷᵢⱼ))`, with `Z` chosen so the
//! weights sum to one.

use std::fmt::Write as _;

use rand::seq::SliceRandom;

use crate::corpus::{build_vocab, normalize, tag_spans, to_bmes, SegmentedSentence, TaggedSentence, Vocab};
use crate::error::{Error, Result};
use crate::eval::score;
use crate::model::{EncodedSentence, UglModel};
use crate::nn::{rng, GradSet};
use crate::ptrain::{self, TrainConfig, TrainReport};

/// Clamp applied to the error rate before taking the log-odds.
pub const ERROR_CLAMP: f64 = 1e-6;

const HIGH_STREAM: u64 = 0x4849_4753;

/// Per-sentence weights over the high-resource corpus and the quantities
/// of the last update.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityState {
    pub weights: Vec<f64>,
    pub update_rate: f64,
    pub error_rate: f64,
    pub normalizer: f64,
    pub iteration: usize,
}

impl SimilarityState {
    /// Uniform weights `1/n`.
    pub fn uniform(n: usize) -> Self {
        SimilarityState {
            weights: vec![1.0 / n as f64; n],
            update_rate: 0.0,
            error_rate: 0.0,
            normalizer: 1.0,
            iteration: 0,
        }
    }
}

/// `1 − F1(p, r)`; defined as 1 when `p = r = 0`.
pub fn error_rate(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        return 1.0;
    }
    1.0 - 2.0 * p * r / (p + r)
}

/// `½ ln((1 − e)/e)` with `e` clamped to `[1e-6, 1 − 1e-6]`.
pub fn update_rate(e: f64) -> f64 {
    let e = e.clamp(ERROR_CLAMP, 1.0 - ERROR_CLAMP);
    0.5 * ((1.0 - e) / e).ln()
}

/// Reweights every high-resource sentence from its per-position
/// correctness indicators, using `state.update_rate`.
pub fn update_similarity(state: &SimilarityState, correct: &[Vec<bool>]) -> Result<SimilarityState> {
    if correct.len() != state.weights.len() {
        return Err(Error::Structure(format!(
            "{} indicator rows for {} weights",
            correct.len(),
            state.weights.len()
        )));
    }
    let a = state.update_rate;
    let (hit, miss) = (a.exp(), 1.0);
    let mut raw = Vec::with_capacity(correct.len());
    for (i, (w, ind)) in state.weights.iter().zip(correct).enumerate() {
        if ind.is_empty() {
            return Err(Error::Alignment { sentence: i });
        }
        let inner: f64 = ind.iter().map(|&c| if c { hit } else { miss }).sum();
        raw.push(w / ind.len() as f64 * inner);
    }
    let z: f64 = raw.iter().sum();
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::NonFinite(format!("similarity normalizer {z}")));
    }
    Ok(SimilarityState {
        weights: raw.into_iter().map(|r| r / z).collect(),
        update_rate: a,
        error_rate: state.error_rate,
        normalizer: z,
        iteration: state.iteration + 1,
    })
}

/// Learning rate of a high-resource sentence: `α · wᵢ`.
pub fn per_sample_lr(base_lr: f64, w: f64) -> f64 {
    base_lr * w
}

/// Rejects a teacher whose structure differs from the requested student.
pub fn check_compatible(teacher: &UglModel, dim: usize, window: usize, filter: usize, use_bigrams: bool) -> Result<()> {
    let c = teacher.config();
    if (c.dim, c.window, c.filter, c.use_bigrams) != (dim, window, filter, use_bigrams) {
        return Err(Error::Structure(format!(
            "teacher has d={} k={} f={} bigrams={}, student wants d={dim} k={window} f={filter} bigrams={use_bigrams}",
            c.dim, c.window, c.filter, c.use_bigrams
        )));
    }
    Ok(())
}

/// Builds a student over `vocab` from a trained teacher. Non-embedding
/// weights are copied verbatim; embedding rows are copied for entries both
/// vocabularies share and freshly initialized otherwise.
pub fn init_student(teacher: &UglModel, vocab: Vocab, seed: u64) -> Result<UglModel> {
    let c = teacher.config();
    let mut student = UglModel::new(vocab, c.dim, c.window, c.filter, c.use_bigrams, seed)?;
    let d = c.dim;
    let layout = student.net.layout.clone();
    for id in 0..student.params.len() {
        if !student.net.is_embedding(id) {
            *student.params.tensor_mut(id) = teacher.params.tensor(id).clone();
        }
    }
    let chars = student.params.tensor_mut(layout.char_emb).data_mut();
    for (row, ch) in student.vocab.chars().iter().enumerate() {
        if let Some(t) = teacher.vocab.char_id(ch) {
            chars[row * d..(row + 1) * d].copy_from_slice(teacher.params.tensor(layout.char_emb).row(t));
        }
    }
    if let Some(b) = layout.bigram {
        let table = student.params.tensor_mut(b.emb).data_mut();
        for (row, (x, y)) in student.vocab.bigrams().iter().enumerate() {
            if let Some(t) = teacher.vocab.bigram_id(x, y) {
                table[row * d..(row + 1) * d].copy_from_slice(teacher.params.tensor(b.emb).row(t));
            }
        }
    }
    Ok(student)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferConfig {
    /// Fixed rate `α` of low-resource sentences.
    pub base_lr: f64,
    pub epochs: usize,
    /// Mini-batch size (low and high sentences together).
    pub batch_size: usize,
    /// Fraction of each mini-batch drawn from the high-resource corpus.
    pub mix: f64,
    pub seed: u64,
    pub clip: Option<f64>,
    pub bigram_min_count: usize,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            base_lr: 0.01,
            epochs: 10,
            batch_size: ptrain::DEFAULT_BATCH_SIZE,
            mix: 0.5,
            seed: 0,
            clip: Some(ptrain::DEFAULT_CLIP),
            bigram_min_count: crate::corpus::DEFAULT_BIGRAM_MIN_COUNT,
        }
    }
}

impl TransferConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.base_lr.is_finite() || self.base_lr <= 0.0 {
            return Err(Error::Config("base learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.mix) {
            return Err(Error::Config(format!("mix {} must lie in [0, 1)", self.mix)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }

    /// `(low, high)` sentences per mini-batch; at least one low sentence.
    pub fn split(&self) -> (usize, usize) {
        let high = ((self.mix * self.batch_size as f64).round() as usize).min(self.batch_size - 1);
        (self.batch_size - high, high)
    }
}

/// One row of the similarity history.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryRow {
    pub epoch: usize,
    pub low_loss: f64,
    pub error_rate: f64,
    pub update_rate: f64,
    pub min_w: f64,
    pub max_w: f64,
    pub mean_w: f64,
    pub sum_w: f64,
}

pub fn history_table(rows: &[HistoryRow]) -> String {
    let mut s = String::from("epoch\tloss\te\ta\tmin_w\tmax_w\tmean_w\tsum_w\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.9}",
            r.epoch, r.low_loss, r.error_rate, r.update_rate, r.min_w, r.max_w, r.mean_w, r.sum_w
        );
    }
    s
}

pub struct TransferOutcome {
    pub model: UglModel,
    pub state: SimilarityState,
    pub history: Vec<HistoryRow>,
}

/// Vocabulary over both corpora, for a student that reads both.
pub fn joint_vocab(high: &[SegmentedSentence], low: &[SegmentedSentence], bigram_min_count: usize) -> Result<Vocab> {
    let tagged: Vec<TaggedSentence> = high.iter().chain(low).map(|s| to_bmes(&normalize(s))).collect::<Result<_>>()?;
    Ok(build_vocab(&tagged, bigram_min_count))
}

/// Trains a teacher on the high-resource corpus.
pub fn train_teacher(
    high: &[SegmentedSentence],
    dim: usize,
    window: usize,
    filter: usize,
    use_bigrams: bool,
    cfg: &TrainConfig,
    bigram_min_count: usize,
) -> Result<(UglModel, TrainReport)> {
    let tagged: Vec<TaggedSentence> = high.iter().map(|s| to_bmes(&normalize(s))).collect::<Result<_>>()?;
    let mut teacher = UglModel::new(build_vocab(&tagged, bigram_min_count), dim, window, filter, use_bigrams, cfg.seed)?;
    let report = ptrain::train(&mut teacher, high, None, cfg)?;
    Ok((teacher, report))
}

/// Per-position correctness of the student on the high-resource set and
/// the resulting word-level precision and recall.
fn assess(model: &UglModel, gold: &[SegmentedSentence], encoded: &[EncodedSentence]) -> Result<(Vec<Vec<bool>>, f64, f64)> {
    let mut correct = Vec::with_capacity(gold.len());
    let mut pred = Vec::with_capacity(gold.len());
    for (g, enc) in gold.iter().zip(encoded) {
        let tags = model.net.predict_tags(&model.params, enc);
        correct.push(tags.iter().zip(&enc.tags).map(|(p, y)| p == y).collect());
        let units = g.units();
        pred.push(SegmentedSentence {
            words: tag_spans(&tags).into_iter().map(|(a, b)| units[a..b].concat()).collect(),
        });
    }
    let report = score(gold, &pred)?;
    Ok((correct, report.precision, report.recall))
}

/// Similarity-weighted student training. `student` is usually the result
/// of [`init_student`]; `weights` overrides the uniform start.
pub fn train_transfer(
    mut student: UglModel,
    high: &[SegmentedSentence],
    low: &[SegmentedSentence],
    cfg: &TransferConfig,
    weights: Option<Vec<f64>>,
) -> Result<TransferOutcome> {
    cfg.validate()?;
    if low.is_empty() {
        return Err(Error::Config("low-resource corpus is empty".into()));
    }
    let high_gold: Vec<SegmentedSentence> = high.iter().map(normalize).collect();
    let high_enc = student.encode_corpus(high)?;
    let low_enc = student.encode_corpus(low)?;
    let mut state = SimilarityState::uniform(high.len());
    if let Some(w) = weights {
        if w.len() != high.len() {
            return Err(Error::Structure("one weight per high-resource sentence".into()));
        }
        state.weights = w;
    }
    let h = crate::nn::AdamHyper::default().with_lr(cfg.base_lr);
    let (n_low, n_high) = cfg.split();
    let n_high = if high.is_empty() { 0 } else { n_high };
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let low_order = ptrain::epoch_order(cfg.seed, epoch, low.len());
        let mut high_order: Vec<usize> = (0..high.len()).collect();
        high_order.shuffle(&mut rng::stream(cfg.seed ^ HIGH_STREAM, epoch as u64));
        let mut high_cursor = 0;
        let mut total = 0.0;
        for (b, chunk) in low_order.chunks(n_low).enumerate() {
            let batch: Vec<&EncodedSentence> = chunk.iter().map(|&i| &low_enc[i]).collect();
            let (loss, mut grads) = ptrain::batch_gradient(&student.net, &student.params, &batch, None, b)?;
            total += loss * batch.len() as f64;
            let picks: Vec<usize> = (0..n_high)
                .map(|k| high_order[(high_cursor + k) % high_order.len()])
                .collect();
            high_cursor += n_high;
            add_weighted_high(&student, &high_enc, &picks, &state.weights, batch.len(), &mut grads);
            if let Some(c) = cfg.clip {
                grads.clip_global_norm(c);
            }
            student.params.adam_step(&grads, &h)?;
        }
        let (correct, p, r) = assess(&student, &high_gold, &high_enc)?;
        state.error_rate = error_rate(p, r);
        state.update_rate = update_rate(state.error_rate);
        if state.weights.iter().any(|&w| w > 0.0) {
            state = update_similarity(&state, &correct)?;
        }
        history.push(history_row(epoch, total / low.len() as f64, &state));
    }
    Ok(TransferOutcome {
        model: student,
        state,
        history,
    })
}

/// Adds `Σ wᵢ·∇lossᵢ / n_low` over the picked high-resource sentences, so
/// each contributes at `wᵢ` times the rate of a low-resource sentence.
fn add_weighted_high(
    student: &UglModel,
    high: &[EncodedSentence],
    picks: &[usize],
    weights: &[f64],
    n_low: usize,
    grads: &mut GradSet,
) {
    for &i in picks {
        let w = weights[i];
        if w == 0.0 {
            continue;
        }
        student.net.loss_and_grad(&student.params, &high[i], grads, w / n_low as f64);
    }
}

fn history_row(epoch: usize, low_loss: f64, state: &SimilarityState) -> HistoryRow {
    let w = &state.weights;
    let sum: f64 = w.iter().sum();
    HistoryRow {
        epoch: epoch + 1,
        low_loss,
        error_rate: state.error_rate,
        update_rate: state.update_rate,
        min_w: w.iter().copied().fold(f64::INFINITY, f64::min),
        max_w: w.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_w: if w.is_empty() { 0.0 } else { sum / w.len() as f64 },
        sum_w: sum,
    }
}

#[cfg(test)]
mod tests;
