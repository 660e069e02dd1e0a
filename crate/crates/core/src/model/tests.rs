use super::*;
use crate::corpus::{build_vocab, to_bmes};
use crate::nn::grad_check;
use rand::Rng;

fn config(dim: usize, window: usize, use_bigrams: bool) -> ModelConfig {
    ModelConfig {
        dim,
        window,
        filter: 2,
        use_bigrams,
        char_vocab: 12,
        bigram_vocab: 9,
    }
}

fn random_sentence(seed: u64, cfg: &ModelConfig) -> EncodedSentence {
    let mut r = rng::stream(seed, 77);
    let n = r.random_range(3..=6);
    let chars: Vec<usize> = (0..n).map(|_| r.random_range(0..cfg.char_vocab)).collect();
    let mut bigrams: Vec<usize> = (0..n).map(|_| r.random_range(0..cfg.bigram_vocab)).collect();
    bigrams[n - 1] = Vocab::BIGRAM_PAD_ID;
    let tags = (0..n).map(|_| Tag::ALL[r.random_range(0..4)]).collect();
    EncodedSentence { chars, bigrams, tags }
}

/// Scales every matrix up so the check exercises non-linear regions.
fn sharpen(net: &Network, store: &mut ParamStore, seed: u64) {
    let mut r = rng::stream(seed, 78);
    for id in 0..store.len() {
        let emb = net.is_embedding(id);
        for v in store.tensor_mut(id).data_mut() {
            *v = if emb { r.random_range(-1.0..1.0) } else { *v * 1.5 + r.random_range(-0.1..0.1) };
        }
    }
}

fn full_model_check(window: usize, use_bigrams: bool) {
    for seed in 0..5 {
        let cfg = config(8, window, use_bigrams);
        let net = Network::new(cfg.clone()).unwrap();
        let mut store = net.init_params(seed);
        sharpen(&net, &mut store, seed);
        let s = random_sentence(seed, &cfg);
        let report = grad_check(&mut store, 1e-5, |p| {
            let mut g = p.grad_set();
            let loss = net.loss_and_grad(p, &s, &mut g, 1.0);
            Ok((loss, g))
        })
        .unwrap();
        assert!(report.resolved_max_rel_err <= 1e-4, "k={window} seed {seed}: {report:?}");
    }
}

#[test]
fn full_model_gradient_k3() {
    full_model_check(3, false);
}

#[test]
fn full_model_gradient_k5() {
    full_model_check(5, false);
}

#[test]
fn full_model_gradient_with_bigrams() {
    full_model_check(5, true);
}

#[test]
fn config_validation() {
    assert!(config(4, 5, false).validate().is_ok());
    assert_eq!(config(4, 5, false).depth(), 4);
    assert!(config(4, 4, false).validate().is_err());
    let mut c = config(4, 5, false);
    c.filter = 3;
    assert_eq!(c.depth(), 2);
    c.filter = 4;
    assert!(c.validate().is_err());
    c.filter = 1;
    assert!(c.validate().is_err());
}

#[test]
fn zero_scores_give_ln4_loss() {
    let cfg = config(4, 3, false);
    let net = Network::new(cfg.clone()).unwrap();
    let mut store = net.init_params(1);
    store.tensor_mut(net.layout.out_w).data_mut().fill(0.0);
    let s = random_sentence(2, &cfg);
    let mut g = store.grad_set();
    let loss = net.loss_and_grad(&store, &s, &mut g, 1.0);
    assert!((loss - 4f64.ln()).abs() < 1e-12);
    // nothing upstream of the zeroed projection receives gradient
    match g.get(net.layout.char_emb) {
        Some(crate::nn::ParamGrad::Rows(rows)) => assert!(rows.values().flatten().all(|&v| v == 0.0)),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn confident_correct_score_gives_small_loss() {
    let cfg = config(4, 3, false);
    let net = Network::new(cfg.clone()).unwrap();
    let mut store = net.init_params(1);
    store.tensor_mut(net.layout.out_w).data_mut().fill(0.0);
    store.tensor_mut(net.layout.out_b).data_mut().copy_from_slice(&[10.0, 0.0, 0.0, 0.0]);
    let mut s = random_sentence(3, &cfg);
    s.tags = vec![Tag::B; s.len()];
    let mut g = store.grad_set();
    let loss = net.loss_and_grad(&store, &s, &mut g, 1.0);
    let expected = (1.0 + 3.0 * (-10f64).exp()).ln();
    assert!((loss - expected).abs() < 1e-15);
    assert!((loss - 1.36e-4).abs() < 1e-6);
}

#[test]
fn batch_gradient_is_mean_of_sentence_gradients() {
    let cfg = config(4, 5, true);
    let net = Network::new(cfg.clone()).unwrap();
    let store = net.init_params(4);
    let sents: Vec<EncodedSentence> = (0..3).map(|i| random_sentence(10 + i, &cfg)).collect();
    let refs: Vec<&EncodedSentence> = sents.iter().collect();
    let (loss, g) = net.batch_loss_and_grad(&store, &refs);
    let mut manual = store.grad_set();
    let mut total = 0.0;
    for s in &sents {
        let mut one = store.grad_set();
        total += net.loss_and_grad(&store, s, &mut one, 1.0);
        manual.add_scaled(&one, 1.0 / 3.0);
    }
    assert!((loss - total / 3.0).abs() < 1e-12);
    for id in 0..store.len() {
        let width = store.tensor(id).row_len();
        for k in 0..store.tensor(id).len() {
            assert!((g.coordinate(id, k, width) - manual.coordinate(id, k, width)).abs() < 1e-12);
        }
    }
}

#[test]
fn decoder_reverse_direction_sees_reversed_input() {
    let cfg = config(3, 3, false);
    let net = Network::new(cfg).unwrap();
    let mut store = net.init_params(5);
    // make the backward LSTM identical to the forward one
    for (a, b) in [(net.layout.fw.wx, net.layout.bw.wx), (net.layout.fw.wh, net.layout.bw.wh)] {
        let t = store.tensor(a).clone();
        *store.tensor_mut(b) = t;
    }
    let mut r = rng::stream(5, 1);
    let xs: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let rev: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
    let (_, _, states) = net.decoder_forward(&store, &xs);
    let (_, _, states_rev) = net.decoder_forward(&store, &rev);
    for t in 0..4 {
        assert_eq!(states[t][3..], states_rev[3 - t][..3]);
        assert_eq!(states[t][..3], states_rev[3 - t][3..]);
    }
}

#[test]
fn shared_encoder_matches_window_route() {
    let cfg = config(4, 5, true);
    let net = Network::new(cfg.clone()).unwrap();
    let store = net.init_params(6);
    let s = random_sentence(6, &cfg);
    let literal = encoder_forward_windows(&net.window_context(&store, &s), &net.gate_views(&store));
    let cache = net.forward(&store, &s);
    for (i, row) in cache.encoder.output().iter().enumerate() {
        for (a, b) in row.iter().zip(literal.row(i)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn embedding_rows_cover_padding_and_sentence() {
    let cfg = config(4, 5, true);
    let net = Network::new(cfg.clone()).unwrap();
    let s = random_sentence(7, &cfg);
    let rows = net.embedding_rows(&[&s]);
    assert_eq!(rows.len(), 2);
    assert!(rows[0].1.contains(&Vocab::PAD_ID));
    assert!(s.chars.iter().all(|c| rows[0].1.contains(c)));
    assert!(s.bigrams.iter().all(|b| rows[1].1.contains(b)));
}

#[test]
fn init_is_seeded_and_biases_zero() {
    let net = Network::new(config(4, 5, true)).unwrap();
    assert_eq!(net.init_params(3), net.init_params(3));
    assert_ne!(net.init_params(3), net.init_params(4));
    let store = net.init_params(3);
    assert!(store.tensor(net.layout.out_b).data().iter().all(|&v| v == 0.0));
    assert!(store.tensor(net.layout.char_emb).data().iter().all(|v| v.abs() <= EMBEDDING_INIT_BOUND));
}

fn toy_model(use_bigrams: bool) -> UglModel {
    let corpus: Vec<TaggedSentence> = [["他", "来到", "北京"], ["我", "来到", "上海"]]
        .iter()
        .map(|w| to_bmes(&SegmentedSentence::new(w.iter().copied())).unwrap())
        .collect();
    UglModel::new(build_vocab(&corpus, 1), 6, 5, 2, use_bigrams, 9).unwrap()
}

#[test]
fn container_round_trip_preserves_predictions() {
    let model = toy_model(true);
    let bytes = model.to_container().to_bytes().unwrap();
    let back = UglModel::from_container(&Container::read_from(bytes.as_slice()).unwrap()).unwrap();
    assert_eq!(back.net.config, model.net.config);
    assert_eq!(back.vocab, model.vocab);
    let units: Vec<String> = ["他", "来", "到", "上", "海"].iter().map(|s| s.to_string()).collect();
    assert_eq!(back.predict(&units), model.predict(&units));
    let s = model.encode_units(&units, vec![]);
    for (a, b) in back.net.scores(&back.params, &s).iter().zip(model.net.scores(&model.params, &s)) {
        for k in 0..4 {
            assert!((a[k] - b[k]).abs() <= 1e-6 * b[k].abs().max(1.0));
        }
    }
}

#[test]
fn container_with_tampered_vocab_is_rejected() {
    let mut c = toy_model(false).to_container();
    c.texts[0].1.push_str("char 新\n");
    assert!(UglModel::from_container(&c).is_err());
}

#[test]
fn segment_keeps_raw_spelling_and_covers_text() {
    let model = toy_model(false);
    let seg = model.segment("他有3000本 OK书");
    assert_eq!(seg.words.concat(), "他有3000本OK书");
    assert!(seg.words.iter().all(|w| !w.is_empty()));
    assert!(model.segment("").words.is_empty());
}

#[test]
fn predictions_are_always_valid() {
    let model = toy_model(true);
    for n in 1..8 {
        let units: Vec<String> = (0..n).map(|i| ["他", "来", "京", "x"][i % 4].to_string()).collect();
        assert!(model.predict(&units).is_valid());
    }
}
