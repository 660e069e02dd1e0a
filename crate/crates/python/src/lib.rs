//! Python bindings: the segmenter model, training, transfer, scoring and
//! the similarity-weight algebra.

use std::collections::HashMap;

use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;
use uglseg::corpus::{from_bmes, to_bmes, SegmentedSentence, Tag, TaggedSentence};
use uglseg::model::UglModel;
use uglseg::ptrain::{self, Mode, TrainConfig};
use uglseg::transfer::{self, SimilarityState, TransferConfig};
use uglseg::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        Error::NonFiniteGradient { .. } | Error::NonFiniteLoss { .. } | Error::NonFinite(_) => {
            PyArithmeticError::new_err(e.to_string())
        }
        e => PyValueError::new_err(e.to_string()),
    }
}

fn sentences(words: Vec<Vec<String>>) -> Vec<SegmentedSentence> {
    words.into_iter().map(|words| SegmentedSentence { words }).collect()
}

fn word_lists(corpus: Vec<SegmentedSentence>) -> Vec<Vec<String>> {
    corpus.into_iter().map(|s| s.words).collect()
}

fn report_dict(r: uglseg::eval::ScoreReport) -> HashMap<String, f64> {
    HashMap::from([
        ("precision".to_string(), r.precision),
        ("recall".to_string(), r.recall),
        ("f1".to_string(), r.f1),
        ("gold_words".to_string(), r.gold_words as f64),
        ("pred_words".to_string(), r.pred_words as f64),
        ("correct_words".to_string(), r.correct_words as f64),
    ])
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    mode.parse().map_err(|e: Error| PyValueError::new_err(e.to_string()))
}

/// A word segmenter: vocabulary, network configuration and parameters.
#[pyclass(name = "Model", module = "uglseg")]
pub struct PyModel {
    inner: UglModel,
}

#[pymethods]
impl PyModel {
    /// Builds a fresh model whose vocabulary covers `corpus` (a list of
    /// sentences, each a list of words).
    #[new]
    #[pyo3(signature = (corpus, dim=100, window=5, filter=2, bigrams=true, bigram_min_count=3, seed=0))]
    fn new(
        corpus: Vec<Vec<String>>,
        dim: usize,
        window: usize,
        filter: usize,
        bigrams: bool,
        bigram_min_count: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let vocab = transfer::joint_vocab(&sentences(corpus), &[], bigram_min_count).map_err(py_err)?;
        let inner = UglModel::new(vocab, dim, window, filter, bigrams, seed).map_err(py_err)?;
        Ok(PyModel { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        UglModel::load(path).map(|inner| PyModel { inner }).map_err(py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(py_err)
    }

    /// Trains in place; returns the per-epoch losses and the dev F when a
    /// dev corpus is given.
    #[pyo3(signature = (corpus, dev=None, epochs=10, batch_size=16, lr=0.01, mode="serial", threads=1, seed=0, clip=Some(5.0)))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        &mut self,
        py: Python<'_>,
        corpus: Vec<Vec<String>>,
        dev: Option<Vec<Vec<String>>>,
        epochs: usize,
        batch_size: usize,
        lr: f64,
        mode: &str,
        threads: usize,
        seed: u64,
        clip: Option<f64>,
    ) -> PyResult<(Vec<f64>, Option<f64>)> {
        let cfg = TrainConfig {
            batch_size,
            mode: parse_mode(mode)?,
            workers: threads,
            epochs,
            seed,
            lr,
            clip,
        };
        let corpus = sentences(corpus);
        let dev = dev.map(sentences);
        let model = &mut self.inner;
        let report = py
            .detach(|| ptrain::train(model, &corpus, dev.as_deref(), &cfg))
            .map_err(py_err)?;
        Ok((report.losses(), report.dev_f))
    }

    /// Segments raw text into words.
    fn segment(&self, text: &str) -> Vec<String> {
        self.inner.segment(text).words
    }

    /// BMES tags for a sequence of characters, as a string such as "BES".
    fn tag(&self, chars: Vec<String>) -> String {
        self.inner.predict(&chars).tags.iter().map(Tag::to_string).collect()
    }

    fn evaluate(&self, gold: Vec<Vec<String>>) -> PyResult<HashMap<String, f64>> {
        self.inner.evaluate(&sentences(gold)).map(report_dict).map_err(py_err)
    }

    #[getter]
    fn vocab_hash(&self) -> String {
        self.inner.vocab.content_hash()
    }

    #[getter]
    fn config(&self) -> HashMap<String, usize> {
        let c = self.inner.config();
        HashMap::from([
            ("dim".to_string(), c.dim),
            ("window".to_string(), c.window),
            ("filter".to_string(), c.filter),
            ("use_bigrams".to_string(), usize::from(c.use_bigrams)),
            ("char_vocab".to_string(), c.char_vocab),
            ("bigram_vocab".to_string(), c.bigram_vocab),
        ])
    }

    fn __repr__(&self) -> String {
        let c = self.inner.config();
        format!(
            "Model(dim={}, window={}, filter={}, bigrams={}, chars={})",
            c.dim, c.window, c.filter, c.use_bigrams, c.char_vocab
        )
    }
}

/// Word-level precision, recall and F1 of `pred` against `gold`.
#[pyfunction]
fn score(gold: Vec<Vec<String>>, pred: Vec<Vec<String>>) -> PyResult<HashMap<String, f64>> {
    uglseg::eval::score(&sentences(gold), &sentences(pred))
        .map(report_dict)
        .map_err(py_err)
}

#[pyfunction]
fn error_rate_reduction(f_base: f64, f_new: f64) -> PyResult<f64> {
    uglseg::eval::error_rate_reduction(f_base, f_new).map_err(py_err)
}

#[pyfunction]
fn error_rate(p: f64, r: f64) -> f64 {
    transfer::error_rate(p, r)
}

#[pyfunction]
fn update_rate(e: f64) -> f64 {
    transfer::update_rate(e)
}

/// One reweighting step: returns the new weights and the normalizer.
#[pyfunction]
fn update_similarity(weights: Vec<f64>, rate: f64, correct: Vec<Vec<bool>>) -> PyResult<(Vec<f64>, f64)> {
    let state = SimilarityState {
        weights,
        update_rate: rate,
        ..SimilarityState::uniform(0)
    };
    let next = transfer::update_similarity(&state, &correct).map_err(py_err)?;
    Ok((next.weights, next.normalizer))
}

/// BMES tag string of a segmented sentence.
#[pyfunction]
fn bmes(words: Vec<String>) -> PyResult<String> {
    let t = to_bmes(&SegmentedSentence { words }).map_err(py_err)?;
    Ok(t.tags.iter().map(Tag::to_string).collect())
}

/// Words spelled out by characters and a BMES tag string.
#[pyfunction]
fn words_from_bmes(chars: Vec<String>, tags: &str) -> PyResult<Vec<String>> {
    let tags = tags
        .chars()
        .map(|c| match c {
            'B' => Ok(Tag::B),
            'M' => Ok(Tag::M),
            'E' => Ok(Tag::E),
            'S' => Ok(Tag::S),
            _ => Err(PyValueError::new_err(format!("unknown tag `{c}`"))),
        })
        .collect::<PyResult<Vec<Tag>>>()?;
    from_bmes(&TaggedSentence { chars, tags }).map(|s| s.words).map_err(py_err)
}

/// `n` synthetic segmented sentences.
#[pyfunction]
fn toy_corpus(seed: u64, n: usize) -> Vec<Vec<String>> {
    word_lists(uglseg::synth::toy_corpus(seed, n))
}

/// The synthetic transfer task as `(high, low, low_dev)`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn transfer_task(seed: u64) -> (Vec<Vec<String>>, Vec<Vec<String>>, Vec<Vec<String>>) {
    let t = uglseg::synth::transfer_task(seed);
    (word_lists(t.high), word_lists(t.low), word_lists(t.low_dev))
}

/// Trains a student from `teacher` on `low` with similarity-weighted
/// sentences from `high`. Returns the student and the per-epoch history.
#[pyfunction]
#[pyo3(signature = (teacher, high, low, epochs=10, batch_size=16, lr=0.01, mix=0.5, seed=0, bigram_min_count=3))]
#[allow(clippy::too_many_arguments)]
fn train_transfer(
    py: Python<'_>,
    teacher: &PyModel,
    high: Vec<Vec<String>>,
    low: Vec<Vec<String>>,
    epochs: usize,
    batch_size: usize,
    lr: f64,
    mix: f64,
    seed: u64,
    bigram_min_count: usize,
) -> PyResult<(PyModel, Vec<HashMap<String, f64>>)> {
    let cfg = TransferConfig {
        base_lr: lr,
        epochs,
        batch_size,
        mix,
        seed,
        bigram_min_count,
        ..TransferConfig::default()
    };
    let (high, low) = (sentences(high), sentences(low));
    let teacher = &teacher.inner;
    let outcome = py
        .detach(|| {
            let vocab = transfer::joint_vocab(&high, &low, bigram_min_count)?;
            let student = transfer::init_student(teacher, vocab, seed)?;
            transfer::train_transfer(student, &high, &low, &cfg, None)
        })
        .map_err(py_err)?;
    let history = outcome
        .history
        .iter()
        .map(|h| {
            HashMap::from([
                ("epoch".to_string(), h.epoch as f64),
                ("low_loss".to_string(), h.low_loss),
                ("error_rate".to_string(), h.error_rate),
                ("update_rate".to_string(), h.update_rate),
                ("min_w".to_string(), h.min_w),
                ("max_w".to_string(), h.max_w),
                ("mean_w".to_string(), h.mean_w),
                ("sum_w".to_string(), h.sum_w),
            ])
        })
        .collect();
    Ok((PyModel { inner: outcome.model }, history))
}

#[pymodule]
#[pyo3(name = "uglseg")]
fn uglseg_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(error_rate_reduction, m)?)?;
    m.add_function(wrap_pyfunction!(error_rate, m)?)?;
    m.add_function(wrap_pyfunction!(update_rate, m)?)?;
    m.add_function(wrap_pyfunction!(update_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(bmes, m)?)?;
    m.add_function(wrap_pyfunction!(words_from_bmes, m)?)?;
    m.add_function(wrap_pyfunction!(toy_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_task, m)?)?;
    m.add_function(wrap_pyfunction!(train_transfer, m)?)?;
    Ok(())
}
