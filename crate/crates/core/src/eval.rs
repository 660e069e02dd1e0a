//! Bakeoff-style word-level scoring.

use std::collections::HashSet;
use std::fmt;

use crate::corpus::{split_units, SegmentedSentence};
use crate::error::{Error, Result};

/// Corpus-level precision, recall and F1 with the raw counts behind them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gold_words: usize,
    pub pred_words: usize,
    pub correct_words: usize,
}

impl ScoreReport {
    pub fn from_counts(gold_words: usize, pred_words: usize, correct_words: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(correct_words, pred_words);
        let recall = ratio(correct_words, gold_words);
        ScoreReport {
            precision,
            recall,
            f1: f1(precision, recall),
            gold_words,
            pred_words,
            correct_words,
        }
    }

    /// Tab-separated: P, R, F as fractions, then the three counts.
    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.precision, self.recall, self.f1, self.gold_words, self.pred_words, self.correct_words
        )
    }
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P {:.1} R {:.1} F {:.1} (gold {} pred {} correct {})",
            self.precision * 100.0,
            self.recall * 100.0,
            self.f1 * 100.0,
            self.gold_words,
            self.pred_words,
            self.correct_words
        )
    }
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Unit spans `[start, end)` of every word, plus the concatenated units.
fn spans(s: &SegmentedSentence) -> (Vec<String>, Vec<(usize, usize)>) {
    let mut units = Vec::new();
    let mut spans = Vec::with_capacity(s.words.len());
    for w in &s.words {
        let start = units.len();
        units.extend(split_units(w));
        spans.push((start, units.len()));
    }
    (units, spans)
}

/// A predicted word counts as correct iff its span matches a gold span
/// exactly. Counts are summed over the corpus before dividing.
pub fn score(gold: &[SegmentedSentence], pred: &[SegmentedSentence]) -> Result<ScoreReport> {
    if gold.len() != pred.len() {
        return Err(Error::Alignment {
            sentence: gold.len().min(pred.len()),
        });
    }
    let (mut g_total, mut p_total, mut correct) = (0, 0, 0);
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        let (g_units, g_spans) = spans(g);
        let (p_units, p_spans) = spans(p);
        if g_units != p_units {
            return Err(Error::Alignment { sentence: i });
        }
        let gold_set: HashSet<_> = g_spans.iter().collect();
        correct += p_spans.iter().filter(|s| gold_set.contains(s)).count();
        g_total += g_spans.len();
        p_total += p_spans.len();
    }
    Ok(ScoreReport::from_counts(g_total, p_total, correct))
}

/// Relative shrinkage of the error `100 − F` in percent, for F-scores
/// given in percent.
pub fn error_rate_reduction(f_base: f64, f_new: f64) -> Result<f64> {
    if f_base >= 100.0 {
        return Err(Error::Config(format!(
            "baseline F {f_base} leaves no error to reduce"
        )));
    }
    Ok(100.0 * (f_new - f_base) / (100.0 - f_base))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sent(words: &[&str]) -> SegmentedSentence {
        SegmentedSentence::new(words.iter().copied())
    }

    #[test]
    fn hand_example() {
        let r = score(&[sent(&["他", "来到", "北京"])], &[sent(&["他", "来", "到", "北京"])]).unwrap();
        assert_eq!((r.gold_words, r.pred_words, r.correct_words), (3, 4, 2));
        assert!((r.precision - 0.5).abs() < 1e-12);
        assert!((r.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.f1 - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn whole_sentence_prediction_scores_zero() {
        let r = score(&[sent(&["他", "来到", "北京"])], &[sent(&["他来到北京"])]).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn micro_not_macro_aggregation() {
        // sentence 1: 1/1 correct; sentence 2: 0 of 3 predicted, 0 of 1 gold
        let gold = [sent(&["我"]), sent(&["北京人"])];
        let pred = [sent(&["我"]), sent(&["北", "京", "人"])];
        let r = score(&gold, &pred).unwrap();
        assert!((r.precision - 1.0 / 4.0).abs() < 1e-12);
        assert!((r.recall - 1.0 / 2.0).abs() < 1e-12);
        // a macro average would give P = (1 + 0) / 2
        assert!((r.precision - 0.5).abs() > 0.1);
    }

    #[test]
    fn alignment_error_names_sentence() {
        let err = score(&[sent(&["a"]), sent(&["bc"])], &[sent(&["a"]), sent(&["bd"])]).unwrap_err();
        assert!(matches!(err, Error::Alignment { sentence: 1 }));
    }

    #[test]
    fn error_rate_reduction_matches_reported_values() {
        assert!((error_rate_reduction(93.3, 95.6).unwrap() - 34.3).abs() <= 0.05);
        assert!((error_rate_reduction(94.3, 95.8).unwrap() - 26.3).abs() <= 0.05);
        assert_eq!(error_rate_reduction(90.0, 90.0).unwrap(), 0.0);
        assert!(error_rate_reduction(100.0, 100.0).is_err());
    }

    fn arb_corpus() -> impl Strategy<Value = Vec<(String, Vec<usize>, Vec<usize>)>> {
        prop::collection::vec(
            ("[a-e]{1,12}", prop::collection::vec(1usize..4, 12), prop::collection::vec(1usize..4, 12)),
            1..6,
        )
    }

    fn cut(text: &str, lens: &[usize]) -> SegmentedSentence {
        let chars: Vec<char> = text.chars().collect();
        let mut words = Vec::new();
        let mut i = 0;
        for &l in lens.iter().cycle() {
            if i >= chars.len() {
                break;
            }
            let end = (i + l).min(chars.len());
            words.push(chars[i..end].iter().collect::<String>());
            i = end;
        }
        SegmentedSentence { words }
    }

    proptest! {
        #[test]
        fn swap_exchanges_precision_and_recall(c in arb_corpus()) {
            let gold: Vec<_> = c.iter().map(|(t, a, _)| cut(t, a)).collect();
            let pred: Vec<_> = c.iter().map(|(t, _, b)| cut(t, b)).collect();
            let ab = score(&gold, &pred).unwrap();
            let ba = score(&pred, &gold).unwrap();
            prop_assert_eq!(ab.precision, ba.recall);
            prop_assert_eq!(ab.recall, ba.precision);
            prop_assert!(ab.f1 <= ab.precision.max(ab.recall) + 1e-15);
            prop_assert!(ab.f1 >= ab.precision.min(ab.recall) - 1e-15);
            prop_assert!((0.0..=1.0).contains(&ab.f1));
        }

        #[test]
        fn identity_scores_one(c in arb_corpus()) {
            let gold: Vec<_> = c.iter().map(|(t, a, _)| cut(t, a)).collect();
            let r = score(&gold, &gold).unwrap();
            prop_assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        }
    }
}
