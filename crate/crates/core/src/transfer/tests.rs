use super::*;
use crate::nn::rng;
use crate::synth::{toy_corpus, transfer_task};
use proptest::prelude::*;
use rand::Rng;

/// Independent evaluation of the reweighting: explicit exponentials per
/// position, a separately accumulated normalizer, then division.
fn brute_force(w: &[f64], a: f64, correct: &[Vec<bool>]) -> Vec<f64> {
    let mut z = 0.0;
    for i in 0..w.len() {
        let m = correct[i].len() as f64;
        let mut inner = 0.0;
        for &c in &correct[i] {
            inner += (a * if c { 1.0 } else { 0.0 }).exp();
        }
        z += w[i] / m * inner;
    }
    (0..w.len())
        .map(|i| {
            let m = correct[i].len() as f64;
            let inner: f64 = correct[i].iter().map(|&c| (a * f64::from(u8::from(c))).exp()).sum();
            w[i] / (z * m) * inner
        })
        .collect()
}

fn state(weights: Vec<f64>, a: f64) -> SimilarityState {
    SimilarityState {
        weights,
        update_rate: a,
        ..SimilarityState::uniform(0)
    }
}

#[test]
fn error_rate_examples() {
    assert_eq!(error_rate(0.5, 0.5), 0.5);
    assert!((error_rate(0.9, 0.9) - 0.1).abs() < 1e-15);
    let e = error_rate(0.952, 0.941);
    assert!((e - 0.0535).abs() < 5e-4);
    assert!((100.0 * (1.0 - e) - 94.6).abs() <= 0.05);
    assert_eq!(error_rate(0.0, 0.0), 1.0);
}

#[test]
fn update_rate_examples() {
    assert_eq!(update_rate(0.5), 0.0);
    assert!((update_rate(0.1) - 0.5 * 9f64.ln()).abs() < 1e-12);
    assert!((update_rate(0.9) + 0.5 * 9f64.ln()).abs() < 1e-12);
    assert!(update_rate(0.0).is_finite() && update_rate(1.0).is_finite());
    assert!((update_rate(0.0) - 0.5 * ((1.0 - 1e-6) / 1e-6f64).ln()).abs() < 1e-12);
}

#[test]
fn worked_two_sentence_example() {
    let e = std::f64::consts::E;
    let s = update_similarity(&state(vec![0.5, 0.5], 1.0), &[vec![true], vec![false]]).unwrap();
    assert!((s.normalizer - (e + 1.0) / 2.0).abs() < 1e-12);
    assert!((s.weights[0] - e / (e + 1.0)).abs() < 1e-12);
    assert!((s.weights[1] - 1.0 / (e + 1.0)).abs() < 1e-12);
    assert_eq!(s.iteration, 1);
}

#[test]
fn zero_rate_and_all_correct_leave_weights() {
    let w = vec![0.2, 0.3, 0.5];
    let ind = vec![vec![true, false], vec![false], vec![true, true, false]];
    let s = update_similarity(&state(w.clone(), 0.0), &ind).unwrap();
    for (a, b) in s.weights.iter().zip(&w) {
        assert!((a - b).abs() < 1e-15);
    }
    let all = vec![vec![true; 2], vec![true], vec![true; 3]];
    let s = update_similarity(&state(w.clone(), 1.7), &all).unwrap();
    for (a, b) in s.weights.iter().zip(&w) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn length_mismatch_is_rejected() {
    assert!(update_similarity(&state(vec![0.5, 0.5], 1.0), &[vec![true]]).is_err());
    assert!(update_similarity(&state(vec![0.5, 0.5], 1.0), &[vec![true], vec![]]).is_err());
}

#[test]
fn random_instances_match_brute_force() {
    let mut r = rng::stream(11, 0);
    for _ in 0..1000 {
        let n = r.random_range(1..=100);
        let raw: Vec<f64> = (0..n).map(|_| r.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let a = r.random_range(-3.0..3.0);
        let ind: Vec<Vec<bool>> = (0..n)
            .map(|_| (0..r.random_range(1..=50)).map(|_| r.random_bool(0.7)).collect())
            .collect();
        let s = update_similarity(&state(w.clone(), a), &ind).unwrap();
        assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(s.weights.iter().all(|&x| x >= 0.0));
        for (x, y) in s.weights.iter().zip(brute_force(&w, a, &ind)) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn more_correct_positions_weigh_more(a in 0.01f64..4.0, m in 2usize..20, k in 0usize..19) {
        let k = k % m;
        let ind = vec![
            (0..m).map(|j| j <= k).collect::<Vec<bool>>(),
            (0..m).map(|j| j < k).collect::<Vec<bool>>(),
        ];
        let s = update_similarity(&state(vec![0.5, 0.5], a), &ind).unwrap();
        prop_assert!(s.weights[0] > s.weights[1]);
    }

    #[test]
    fn rate_increases_with_f1(f1 in 0.0f64..0.999, step in 0.0001f64..0.001) {
        prop_assert!(update_rate(1.0 - (f1 + step)) > update_rate(1.0 - f1));
        let e = 1.0 - f1;
        prop_assert!((update_rate(1.0 - e) + update_rate(e)).abs() < 1e-9);
    }
}

#[test]
fn per_sample_lr_examples() {
    assert_eq!(per_sample_lr(0.01, 1.0), 0.01);
    assert_eq!(per_sample_lr(0.01, 0.5), 0.005);
    assert_eq!(per_sample_lr(0.01, 0.0), 0.0);
}

fn vocab_of(words: &[&[&str]]) -> Vocab {
    let tagged: Vec<TaggedSentence> = words
        .iter()
        .map(|w| to_bmes(&SegmentedSentence::new(w.iter().copied())).unwrap())
        .collect();
    build_vocab(&tagged, 1)
}

fn teacher() -> UglModel {
    UglModel::new(vocab_of(&[&["他", "来到", "北京"]]), 4, 5, 2, true, 3).unwrap()
}

#[test]
fn identical_vocab_copies_everything() {
    let t = teacher();
    let s = init_student(&t, t.vocab.clone(), 99).unwrap();
    assert_eq!(s.params.tensors(), t.params.tensors());
    let units: Vec<String> = ["他", "来", "到", "京"].iter().map(|c| c.to_string()).collect();
    assert_eq!(s.predict(&units), t.predict(&units));
}

#[test]
fn disjoint_and_overlapping_vocab() {
    let t = teacher();
    let v = vocab_of(&[&["他", "去", "上海"]]);
    let s = init_student(&t, v.clone(), 99).unwrap();
    let fresh = UglModel::new(v, 4, 5, 2, true, 99).unwrap();
    let emb = s.net.layout.char_emb;
    for id in 0..s.params.len() {
        if !s.net.is_embedding(id) {
            assert_eq!(s.params.tensor(id), t.params.tensor(id));
        }
    }
    let row = |m: &UglModel, c: &str| m.params.tensor(emb).row(m.vocab.char_id(c).unwrap()).to_vec();
    assert_eq!(row(&s, "他"), row(&t, "他"));
    assert_eq!(row(&s, "去"), row(&fresh, "去"));
    assert_eq!(row(&s, "海"), row(&fresh, "海"));
    // reserved symbols exist in both vocabularies
    assert_eq!(row(&s, crate::corpus::PAD), row(&t, crate::corpus::PAD));
}

#[test]
fn incompatible_teacher_is_rejected() {
    let t = teacher();
    assert!(check_compatible(&t, 4, 5, 2, true).is_ok());
    assert!(matches!(check_compatible(&t, 8, 5, 2, true), Err(Error::Structure(_))));
}

fn small_setup() -> (UglModel, Vec<SegmentedSentence>, Vec<SegmentedSentence>) {
    let t = transfer_task(4);
    let high: Vec<_> = t.high[..40].to_vec();
    let low: Vec<_> = t.low[..20].to_vec();
    let vocab = joint_vocab(&high, &low, 1).unwrap();
    (UglModel::new(vocab, 6, 3, 2, false, 5).unwrap(), high, low)
}

fn cfg(mix: f64) -> TransferConfig {
    TransferConfig {
        epochs: 2,
        batch_size: 8,
        mix,
        seed: 9,
        ..TransferConfig::default()
    }
}

#[test]
fn zero_weights_reproduce_low_only_training() {
    let (model, high, low) = small_setup();
    let zeroed = train_transfer(model.clone(), &high, &low, &cfg(0.5), Some(vec![0.0; high.len()])).unwrap();
    let low_only = train_transfer(model, &[], &low, &cfg(0.5), None).unwrap();
    assert_eq!(zeroed.model.params, low_only.model.params);
}

#[test]
fn no_mixing_equals_plain_training() {
    let (model, high, low) = small_setup();
    let out = train_transfer(model.clone(), &high, &low, &cfg(0.0), None).unwrap();
    let mut plain = model;
    let tc = TrainConfig {
        batch_size: 8,
        epochs: 2,
        seed: 9,
        ..TrainConfig::default()
    };
    ptrain::train(&mut plain, &low, None, &tc).unwrap();
    assert_eq!(out.model.params, plain.params);
}

#[test]
fn history_tracks_normalized_weights() {
    let (model, high, low) = small_setup();
    let out = train_transfer(model, &high, &low, &cfg(0.5), None).unwrap();
    assert_eq!(out.history.len(), 2);
    for row in &out.history {
        assert!((row.sum_w - 1.0).abs() < 1e-9);
        assert!(row.min_w >= 0.0 && row.max_w <= 1.0);
        assert!(row.update_rate.is_finite());
        assert!((row.update_rate - update_rate(row.error_rate)).abs() < 1e-15);
    }
    assert_eq!(out.state.iteration, 2);
    let table = history_table(&out.history);
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn uniform_start_and_split() {
    let s = SimilarityState::uniform(4);
    assert_eq!(s.weights, [0.25; 4]);
    assert_eq!(cfg(0.5).split(), (4, 4));
    assert_eq!(cfg(0.0).split(), (8, 0));
    assert!(TransferConfig { mix: 1.0, ..cfg(0.0) }.validate().is_err());
}

#[test]
fn empty_low_corpus_is_an_error() {
    let (model, high, _) = small_setup();
    assert!(train_transfer(model, &high, &[], &cfg(0.5), None).is_err());
}

#[test]
fn teacher_trains_on_high_corpus() {
    let high = toy_corpus(2, 10);
    let tc = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    let (t, report) = train_teacher(&high, 4, 3, 2, false, &tc, 1).unwrap();
    assert_eq!(report.epochs.len(), 1);
    assert!(t.vocab.char_count() > crate::corpus::Vocab::RESERVED_CHARS);
}
