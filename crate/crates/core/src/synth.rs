//! Seeded synthetic segmented corpora for smoke tests, benchmarks and the
//! transfer task.
//!
//! Words are drawn from a generated lexicon over CJK ideographs with a
//! Zipf-like frequency profile. The low-resource domain shares most of the
//! lexicon but follows a different convention: a set of compounds that the
//! high-resource domain writes as one word is split in two, and it has
//! vocabulary and word frequencies of its own.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::SegmentedSentence;
use crate::nn::rng;

const LEXICON_STREAM: u64 = 0x4c45_5849;
const TOY_STREAM: u64 = 0x544f_5931;
const HIGH_STREAM: u64 = 0x4849_4748;
const LOW_STREAM: u64 = 0x4c4f_5731;
const DEV_STREAM: u64 = 0x4445_5631;

/// Sizes of the transfer task.
pub const HIGH_SENTENCES: usize = 500;
pub const LOW_SENTENCES: usize = 50;
pub const DEV_SENTENCES: usize = 100;
pub const TOY_SENTENCES: usize = 50;

/// A word inventory with sampling weights.
#[derive(Clone, Debug)]
pub struct Lexicon {
    pub words: Vec<String>,
    weights: Vec<f64>,
    total: f64,
}

impl Lexicon {
    fn new(words: Vec<String>, exponent: f64) -> Self {
        let weights: Vec<f64> = (1..=words.len()).map(|r| (r as f64).powf(-exponent)).collect();
        let total = weights.iter().sum();
        Lexicon { words, weights, total }
    }

    pub fn sample<'a>(&'a self, r: &mut impl Rng) -> &'a str {
        let mut x = r.random_range(0.0..self.total);
        for (w, &p) in self.words.iter().zip(&self.weights) {
            if x < p {
                return w;
            }
            x -= p;
        }
        self.words.last().expect("non-empty lexicon")
    }
}

fn ideograph(r: &mut impl Rng, pool: usize) -> char {
    char::from_u32(0x4e00 + r.random_range(0..pool as u32)).expect("CJK range")
}

/// A random word whose length is drawn uniformly from `lens`.
fn fresh_word(r: &mut impl Rng, lens: &[usize], pool: usize) -> String {
    let len = lens[r.random_range(0..lens.len())];
    (0..len).map(|_| ideograph(r, pool)).collect()
}

/// Both domains of the transfer task.
#[derive(Clone, Debug)]
pub struct Domains {
    pub high: Lexicon,
    pub low: Lexicon,
    /// Compound → its two halves, for words split only in the low domain.
    pub split: Vec<(String, String, String)>,
}

impl Domains {
    pub fn new(seed: u64) -> Self {
        let mut r = rng::stream(seed, LEXICON_STREAM);
        let pool = 400;
        let lens = [1, 1, 1, 2, 2, 2, 2, 2, 3, 3];
        let mut shared: Vec<String> = (0..260).map(|_| fresh_word(&mut r, &lens, pool)).collect();
        shared.sort();
        shared.dedup();
        shared.shuffle(&mut r);
        let twos: Vec<String> = shared.iter().filter(|w| w.chars().count() == 2).cloned().collect();
        let split: Vec<(String, String, String)> = (0..24)
            .map(|i| {
                let (a, b) = (&twos[2 * i], &twos[2 * i + 1]);
                (format!("{a}{b}"), a.clone(), b.clone())
            })
            .collect();
        let high_only: Vec<String> = (0..40).map(|_| fresh_word(&mut r, &[1, 2, 3], pool)).collect();
        let low_only: Vec<String> = (0..30).map(|_| fresh_word(&mut r, &[1, 2, 3], pool)).collect();

        let mut high_words: Vec<String> = shared.clone();
        high_words.extend(split.iter().map(|(c, _, _)| c.clone()));
        high_words.extend(high_only);
        high_words.shuffle(&mut r);

        // the low domain reorders frequencies: shared words keep a loosely
        // similar rank, own words enter near the top
        let mut low_words: Vec<String> = shared;
        low_words.extend(split.iter().map(|(c, _, _)| c.clone()));
        low_words.shuffle(&mut r);
        for (i, w) in low_only.into_iter().enumerate() {
            low_words.insert((i * 5).min(low_words.len()), w);
        }
        Domains {
            high: Lexicon::new(high_words, 1.0),
            low: Lexicon::new(low_words, 1.0),
            split,
        }
    }

    fn sentence(&self, lex: &Lexicon, low: bool, r: &mut impl Rng) -> SegmentedSentence {
        let n = r.random_range(4..=10);
        let mut words = Vec::with_capacity(n + 2);
        for _ in 0..n {
            let w = lex.sample(r);
            match self.split.iter().find(|(c, _, _)| c == w).filter(|_| low) {
                Some((_, a, b)) => {
                    words.push(a.clone());
                    words.push(b.clone());
                }
                None => words.push(w.to_string()),
            }
        }
        if r.random_bool(0.15) {
            words.insert(r.random_range(0..words.len()), r.random_range(1..2000).to_string());
        }
        SegmentedSentence { words }
    }

    fn corpus(&self, low: bool, n: usize, r: &mut ChaCha8Rng) -> Vec<SegmentedSentence> {
        let lex = if low { &self.low } else { &self.high };
        (0..n).map(|_| self.sentence(lex, low, r)).collect()
    }
}

/// The synthetic transfer task: a large high-resource corpus, a small
/// low-resource corpus in a shifted convention, and a low-resource dev set.
#[derive(Clone, Debug)]
pub struct TransferTask {
    pub high: Vec<SegmentedSentence>,
    pub low: Vec<SegmentedSentence>,
    pub low_dev: Vec<SegmentedSentence>,
}

pub fn transfer_task(seed: u64) -> TransferTask {
    let domains = Domains::new(seed);
    TransferTask {
        high: domains.corpus(false, HIGH_SENTENCES, &mut rng::stream(seed, HIGH_STREAM)),
        low: domains.corpus(true, LOW_SENTENCES, &mut rng::stream(seed, LOW_STREAM)),
        low_dev: domains.corpus(true, DEV_SENTENCES, &mut rng::stream(seed, DEV_STREAM)),
    }
}

/// `n` sentences of the high-resource domain, for smoke tests and
/// benchmarks.
pub fn toy_corpus(seed: u64, n: usize) -> Vec<SegmentedSentence> {
    Domains::new(seed).corpus(false, n, &mut rng::stream(seed, TOY_STREAM))
}
