//! The global-local segmentation network: embeddings and window context,
//! gated filter-recursive encoder, bidirectional LSTM decoder and a
//! position-wise tag layer trained with cross-entropy.

pub mod decode;
pub mod encoder;
pub mod gate;
pub mod lstm;

use std::path::Path;

use crate::corpus::{normalize, normalize_units, tag_spans, to_bmes, Tag, TaggedSentence, Vocab};
use crate::eval::{score, ScoreReport};
use crate::error::{Error, Result};
use crate::nn::tensor::{add_assign, affine, log_softmax, matvec_t_acc, outer_acc, softmax_in_place};
use crate::nn::{rng, Container, GradSet, ParamRead, ParamStore, Tensor};
use crate::corpus::SegmentedSentence;

pub use decode::constrained_decode;
pub use encoder::{encode_sequence, encoder_forward_windows, window_context, EncoderCache};
pub use gate::{GateCache, GateGrads, GateView};
pub use lstm::{LstmCache, LstmGrads, LstmView};

/// Uniform bound for randomly initialised embedding rows.
pub const EMBEDDING_INIT_BOUND: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    /// Embedding and hidden size.
    pub dim: usize,
    /// Odd window width.
    pub window: usize,
    /// Filter width of every encoder layer.
    pub filter: usize,
    pub use_bigrams: bool,
    pub char_vocab: usize,
    pub bigram_vocab: usize,
}

impl ModelConfig {
    pub const TAG_COUNT: usize = Tag::COUNT;

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        if self.window.is_multiple_of(2) {
            return Err(Error::Config(format!("window {} must be odd", self.window)));
        }
        if self.filter < 2 {
            return Err(Error::Config(format!("filter {} must be at least 2", self.filter)));
        }
        if !(self.window - 1).is_multiple_of(self.filter - 1) {
            return Err(Error::Config(format!(
                "filter {} cannot reduce window {} to width 1",
                self.filter, self.window
            )));
        }
        if self.char_vocab < Vocab::RESERVED_CHARS {
            return Err(Error::Config("character vocabulary lacks reserved symbols".into()));
        }
        Ok(())
    }

    /// Number of encoder layers: `(k − 1) / (f − 1)`.
    pub fn depth(&self) -> usize {
        (self.window - 1) / (self.filter - 1)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GateIds {
    pub u: usize,
    pub ub: usize,
    pub w: usize,
    pub wb: usize,
    pub g: usize,
    pub gb: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct LstmIds {
    pub wx: usize,
    pub wh: usize,
    pub b: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct BigramIds {
    pub emb: usize,
    pub proj_w: usize,
    pub proj_b: usize,
}

/// Parameter ids in registration order.
#[derive(Clone, Debug)]
pub struct Layout {
    pub char_emb: usize,
    pub bigram: Option<BigramIds>,
    pub layers: Vec<GateIds>,
    pub fw: LstmIds,
    pub bw: LstmIds,
    pub out_w: usize,
    pub out_b: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Init {
    Embedding,
    Glorot,
    Zero,
}

/// Characters of a sentence as ids, with gold tags when known.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedSentence {
    pub chars: Vec<usize>,
    pub bigrams: Vec<usize>,
    pub tags: Vec<Tag>,
}

impl EncodedSentence {
    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }
}

/// Everything the backward pass needs from one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// `(char id, bigram id)` at every padded position.
    pub inputs: Vec<(usize, usize)>,
    /// `[char; bigram]` embeddings per padded position (bigram models only).
    pub concat: Vec<Vec<f64>>,
    pub encoder: EncoderCache,
    pub fw: LstmCache,
    pub bw: LstmCache,
    /// Decoder states, `[forward; backward]`, n × 2d.
    pub states: Vec<Vec<f64>>,
    /// Tag scores, n × 4.
    pub scores: Vec<[f64; 4]>,
}

/// `−log softmax(scores)[gold]`, written as `(max − s_gold) + ln(1 + Σ
/// exp(s_k − max))` over the non-maximal classes so that it stays accurate
/// to about an ulp.
pub fn cross_entropy(scores: &[f64; 4], gold: usize) -> f64 {
    let top = (0..4).fold(0, |b, k| if scores[k] > scores[b] { k } else { b });
    let rest: f64 = (0..4).filter(|&k| k != top).map(|k| (scores[k] - scores[top]).exp()).sum();
    (scores[top] - scores[gold]) + rest.ln_1p()
}

/// Network structure without parameter values.
#[derive(Clone, Debug)]
pub struct Network {
    pub config: ModelConfig,
    pub layout: Layout,
    specs: Vec<(String, Vec<usize>, Init)>,
}

fn name_stream(name: &str) -> u64 {
    // FNV-1a, so a parameter's init does not depend on which others exist.
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

impl Network {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let d = config.dim;
        let f = config.filter;
        let mut specs: Vec<(String, Vec<usize>, Init)> = Vec::new();
        let mut add = |name: String, shape: Vec<usize>, init: Init| {
            specs.push((name, shape, init));
            specs.len() - 1
        };
        let char_emb = add("char_emb".into(), vec![config.char_vocab, d], Init::Embedding);
        let bigram = config.use_bigrams.then(|| BigramIds {
            emb: add("bigram_emb".into(), vec![config.bigram_vocab, d], Init::Embedding),
            proj_w: add("bigram_proj.w".into(), vec![d, 2 * d], Init::Glorot),
            proj_b: add("bigram_proj.b".into(), vec![d], Init::Zero),
        });
        let (us, ws, gs) = gate::gate_shapes(d, f);
        let layers = (0..config.depth())
            .map(|l| GateIds {
                u: add(format!("enc{l}.update.w"), us.to_vec(), Init::Glorot),
                ub: add(format!("enc{l}.update.b"), vec![us[0]], Init::Zero),
                w: add(format!("enc{l}.cand.w"), ws.to_vec(), Init::Glorot),
                wb: add(format!("enc{l}.cand.b"), vec![ws[0]], Init::Zero),
                g: add(format!("enc{l}.reset.w"), gs.to_vec(), Init::Glorot),
                gb: add(format!("enc{l}.reset.b"), vec![gs[0]], Init::Zero),
            })
            .collect();
        let mut lstm = |dir: &str| LstmIds {
            wx: add(format!("dec.{dir}.wx"), vec![4 * d, d], Init::Glorot),
            wh: add(format!("dec.{dir}.wh"), vec![4 * d, d], Init::Glorot),
            b: add(format!("dec.{dir}.b"), vec![4 * d], Init::Zero),
        };
        let fw = lstm("fw");
        let bw = lstm("bw");
        let out_w = add("out.w".into(), vec![Tag::COUNT, 2 * d], Init::Glorot);
        let out_b = add("out.b".into(), vec![Tag::COUNT], Init::Zero);
        Ok(Network {
            config,
            layout: Layout {
                char_emb,
                bigram,
                layers,
                fw,
                bw,
                out_w,
                out_b,
            },
            specs,
        })
    }

    pub fn param_names(&self) -> impl Iterator<Item = &str> {
        self.specs.iter().map(|(n, _, _)| n.as_str())
    }

    pub fn param_shape(&self, id: usize) -> &[usize] {
        &self.specs[id].1
    }

    /// Whether `id` is an embedding table (updated by rows).
    pub fn is_embedding(&self, id: usize) -> bool {
        self.specs[id].2 == Init::Embedding
    }

    /// Freshly initialised value of one parameter: embeddings uniform in
    /// ±0.05, matrices Glorot-uniform, biases zero.
    pub fn init_param(&self, id: usize, seed: u64) -> Tensor {
        let (name, shape, init) = &self.specs[id];
        let mut t = Tensor::zeros(shape);
        let mut r = rng::stream(seed, name_stream(name));
        match init {
            Init::Zero => {}
            Init::Embedding => rng::fill_uniform(&mut r, t.data_mut(), EMBEDDING_INIT_BOUND),
            Init::Glorot => {
                let bound = rng::glorot_bound(shape[1], shape[0]);
                rng::fill_uniform(&mut r, t.data_mut(), bound);
            }
        }
        t
    }

    pub fn init_params(&self, seed: u64) -> ParamStore {
        let mut store = ParamStore::new();
        for id in 0..self.specs.len() {
            store
                .add(&self.specs[id].0, self.init_param(id, seed))
                .expect("parameter names are unique");
        }
        store
    }

    /// Checks that `store` has exactly this network's names and shapes.
    pub fn check_store(&self, store: &ParamStore) -> Result<()> {
        if store.len() != self.specs.len() {
            return Err(Error::Structure(format!(
                "store has {} parameters, network needs {}",
                store.len(),
                self.specs.len()
            )));
        }
        for (id, (name, shape, _)) in self.specs.iter().enumerate() {
            if store.name(id) != name || store.tensor(id).shape() != shape.as_slice() {
                return Err(Error::Structure(format!("parameter {id} should be `{name}` {shape:?}")));
            }
        }
        Ok(())
    }

    pub fn gate_views<'a>(&self, p: &'a impl ParamRead) -> Vec<GateView<'a>> {
        self.layout
            .layers
            .iter()
            .map(|ids| GateView {
                dim: self.config.dim,
                filter: self.config.filter,
                u: p.values(ids.u),
                ub: p.values(ids.ub),
                w: p.values(ids.w),
                wb: p.values(ids.wb),
                g: p.values(ids.g),
                gb: p.values(ids.gb),
            })
            .collect()
    }

    fn lstm_view<'a>(&self, p: &'a impl ParamRead, ids: LstmIds) -> LstmView<'a> {
        LstmView {
            hidden: self.config.dim,
            wx: p.values(ids.wx),
            wh: p.values(ids.wh),
            b: p.values(ids.b),
        }
    }

    /// `(char, bigram)` ids over the sentence padded by `(k − 1) / 2` PAD
    /// positions on each side.
    pub fn padded_ids(&self, s: &EncodedSentence) -> Vec<(usize, usize)> {
        let half = (self.config.window - 1) / 2;
        let pad = (Vocab::PAD_ID, Vocab::BIGRAM_PAD_ID);
        std::iter::repeat_n(pad, half)
            .chain(s.chars.iter().zip(&s.bigrams).map(|(&c, &b)| (c, b)))
            .chain(std::iter::repeat_n(pad, half))
            .collect()
    }

    /// Input vector per padded position, plus the `[char; bigram]`
    /// concatenations when bigrams are enabled.
    fn embed(&self, p: &impl ParamRead, ids: &[(usize, usize)]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let d = self.config.dim;
        let l = &self.layout;
        match l.bigram {
            None => (ids.iter().map(|&(c, _)| p.row(l.char_emb, c, d).to_vec()).collect(), Vec::new()),
            Some(b) => {
                let concat: Vec<Vec<f64>> = ids
                    .iter()
                    .map(|&(c, bg)| [p.row(l.char_emb, c, d), p.row(b.emb, bg, d)].concat())
                    .collect();
                let inputs = concat
                    .iter()
                    .map(|x| {
                        let mut e = vec![0.0; d];
                        affine(p.values(b.proj_w), p.values(b.proj_b), x, &mut e);
                        e
                    })
                    .collect();
                (inputs, concat)
            }
        }
    }

    /// Window context `H⁰` (n × k × d) for a sentence.
    pub fn window_context(&self, p: &impl ParamRead, s: &EncodedSentence) -> Tensor {
        let (inputs, _) = self.embed(p, &self.padded_ids(s));
        window_context(&inputs, self.config.window)
    }

    /// Bidirectional decoder over encoder outputs; returns the two caches and
    /// the concatenated states (n × 2d).
    pub fn decoder_forward(&self, p: &impl ParamRead, hl: &[Vec<f64>]) -> (LstmCache, LstmCache, Vec<Vec<f64>>) {
        let fw = self.lstm_view(p, self.layout.fw).forward(hl);
        let rev: Vec<Vec<f64>> = hl.iter().rev().cloned().collect();
        let bw = self.lstm_view(p, self.layout.bw).forward(&rev);
        let n = hl.len();
        let states = (0..n)
            .map(|t| [fw.hidden[t].as_slice(), bw.hidden[n - 1 - t].as_slice()].concat())
            .collect();
        (fw, bw, states)
    }

    pub fn forward(&self, p: &impl ParamRead, s: &EncodedSentence) -> ForwardCache {
        let inputs = self.padded_ids(s);
        let (vectors, concat) = self.embed(p, &inputs);
        let encoder = encode_sequence(vectors, &self.gate_views(p));
        let (fw, bw, states) = self.decoder_forward(p, encoder.output());
        let (ow, ob) = (p.values(self.layout.out_w), p.values(self.layout.out_b));
        let scores = states
            .iter()
            .map(|h| {
                let mut sc = [0.0; 4];
                affine(ow, ob, h, &mut sc);
                sc
            })
            .collect();
        ForwardCache {
            inputs,
            concat,
            encoder,
            fw,
            bw,
            states,
            scores,
        }
    }

    pub fn scores(&self, p: &impl ParamRead, s: &EncodedSentence) -> Vec<[f64; 4]> {
        if s.is_empty() {
            return Vec::new();
        }
        self.forward(p, s).scores
    }

    /// Constrained decoding of the position-wise log-probabilities.
    pub fn predict_tags(&self, p: &impl ParamRead, s: &EncodedSentence) -> Vec<Tag> {
        let logp: Vec<[f64; 4]> = self
            .scores(p, s)
            .iter()
            .map(|sc| log_softmax(sc).try_into().expect("four tags"))
            .collect();
        constrained_decode(&logp)
    }

    /// Loss of one sentence (mean cross-entropy over positions); adds
    /// `scale · ∂loss/∂θ` into `grads`.
    pub fn loss_and_grad(&self, p: &impl ParamRead, s: &EncodedSentence, grads: &mut GradSet, scale: f64) -> f64 {
        if s.is_empty() {
            return 0.0;
        }
        let cache = self.forward(p, s);
        let n = s.len();
        let d = self.config.dim;
        let l = &self.layout;

        let mut loss = 0.0;
        let mut dscores = Vec::with_capacity(n);
        for (sc, tag) in cache.scores.iter().zip(&s.tags) {
            loss += cross_entropy(sc, tag.index());
            let mut prob = *sc;
            softmax_in_place(&mut prob);
            prob[tag.index()] -= 1.0;
            dscores.push(prob.map(|x| x * scale / n as f64));
        }
        loss /= n as f64;

        // output layer
        let mut gw = grads.take_dense(l.out_w, Tag::COUNT * 2 * d);
        let mut gb = grads.take_dense(l.out_b, Tag::COUNT);
        let ow = p.values(l.out_w);
        let mut dstates = Vec::with_capacity(n);
        for (ds, h) in dscores.iter().zip(&cache.states) {
            outer_acc(&mut gw, ds, h);
            add_assign(&mut gb, ds);
            let mut dh = vec![0.0; 2 * d];
            matvec_t_acc(ow, ds, &mut dh);
            dstates.push(dh);
        }
        grads.put_dense(l.out_w, gw);
        grads.put_dense(l.out_b, gb);

        // decoder
        let hl = cache.encoder.output();
        let d_fw: Vec<Vec<f64>> = dstates.iter().map(|v| v[..d].to_vec()).collect();
        let d_bw_rev: Vec<Vec<f64>> = dstates.iter().rev().map(|v| v[d..].to_vec()).collect();
        let mut d_enc = self.lstm_backward(p, l.fw, &cache.fw, hl, &d_fw, grads);
        let rev: Vec<Vec<f64>> = hl.iter().rev().cloned().collect();
        let d_rev = self.lstm_backward(p, l.bw, &cache.bw, &rev, &d_bw_rev, grads);
        for (t, dx) in d_rev.iter().rev().enumerate() {
            add_assign(&mut d_enc[t], dx);
        }

        // encoder
        let views = self.gate_views(p);
        let mut bufs: Vec<[Vec<f64>; 6]> = l
            .layers
            .iter()
            .map(|ids| {
                [ids.u, ids.ub, ids.w, ids.wb, ids.g, ids.gb].map(|id| grads.take_dense(id, p.values(id).len()))
            })
            .collect();
        let d_inputs = {
            let mut gg: Vec<GateGrads<'_>> = bufs
                .iter_mut()
                .map(|[u, ub, w, wb, g, gb]| GateGrads { u, ub, w, wb, g, gb })
                .collect();
            encoder::encode_backward(&cache.encoder, &views, &mut gg, d_enc)
        };
        for (ids, b) in l.layers.iter().zip(bufs) {
            for (id, v) in [ids.u, ids.ub, ids.w, ids.wb, ids.g, ids.gb].into_iter().zip(b) {
                grads.put_dense(id, v);
            }
        }

        // embeddings
        match l.bigram {
            None => {
                for (&(c, _), de) in cache.inputs.iter().zip(&d_inputs) {
                    add_assign(grads.row_mut(l.char_emb, c, d), de);
                }
            }
            Some(b) => {
                let mut pw = grads.take_dense(b.proj_w, 2 * d * d);
                let mut pb = grads.take_dense(b.proj_b, d);
                let proj = p.values(b.proj_w);
                for ((&(c, bg), de), x) in cache.inputs.iter().zip(&d_inputs).zip(&cache.concat) {
                    outer_acc(&mut pw, de, x);
                    add_assign(&mut pb, de);
                    let mut dx = vec![0.0; 2 * d];
                    matvec_t_acc(proj, de, &mut dx);
                    add_assign(grads.row_mut(l.char_emb, c, d), &dx[..d]);
                    add_assign(grads.row_mut(b.emb, bg, d), &dx[d..]);
                }
                grads.put_dense(b.proj_w, pw);
                grads.put_dense(b.proj_b, pb);
            }
        }
        loss
    }

    fn lstm_backward(
        &self,
        p: &impl ParamRead,
        ids: LstmIds,
        cache: &LstmCache,
        xs: &[Vec<f64>],
        dh: &[Vec<f64>],
        grads: &mut GradSet,
    ) -> Vec<Vec<f64>> {
        let mut wx = grads.take_dense(ids.wx, p.values(ids.wx).len());
        let mut wh = grads.take_dense(ids.wh, p.values(ids.wh).len());
        let mut b = grads.take_dense(ids.b, p.values(ids.b).len());
        let dxs = self
            .lstm_view(p, ids)
            .backward(cache, xs, dh, &mut LstmGrads { wx: &mut wx, wh: &mut wh, b: &mut b });
        grads.put_dense(ids.wx, wx);
        grads.put_dense(ids.wh, wh);
        grads.put_dense(ids.b, b);
        dxs
    }

    /// Mean loss over the sentences and the gradient of that mean.
    pub fn batch_loss_and_grad(&self, p: &impl ParamRead, batch: &[&EncodedSentence]) -> (f64, GradSet) {
        let mut grads = GradSet::new(self.specs.len());
        if batch.is_empty() {
            return (0.0, grads);
        }
        let scale = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        for s in batch {
            total += self.loss_and_grad(p, s, &mut grads, scale);
        }
        (total * scale, grads)
    }

    /// Embedding rows a batch reads, per embedding parameter.
    pub fn embedding_rows(&self, batch: &[&EncodedSentence]) -> Vec<(usize, Vec<usize>)> {
        let mut chars = vec![Vocab::PAD_ID];
        let mut bigrams = vec![Vocab::BIGRAM_PAD_ID];
        for s in batch {
            chars.extend(&s.chars);
            bigrams.extend(&s.bigrams);
        }
        chars.sort_unstable();
        chars.dedup();
        bigrams.sort_unstable();
        bigrams.dedup();
        let mut out = vec![(self.layout.char_emb, chars)];
        if let Some(b) = self.layout.bigram {
            out.push((b.emb, bigrams));
        }
        out
    }
}

/// A trained (or initialised) segmenter: network, vocabulary and values.
#[derive(Clone, Debug)]
pub struct UglModel {
    pub net: Network,
    pub vocab: Vocab,
    pub params: ParamStore,
}

impl UglModel {
    pub fn new(vocab: Vocab, dim: usize, window: usize, filter: usize, use_bigrams: bool, seed: u64) -> Result<Self> {
        let config = ModelConfig {
            dim,
            window,
            filter,
            use_bigrams,
            char_vocab: vocab.char_count(),
            bigram_vocab: vocab.bigram_count(),
        };
        let net = Network::new(config)?;
        let params = net.init_params(seed);
        Ok(UglModel { net, vocab, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.net.config
    }

    /// Replaces the character embedding table (e.g. with pretrained rows).
    pub fn set_char_embeddings(&mut self, table: Tensor) -> Result<()> {
        let id = self.net.layout.char_emb;
        if table.shape() != self.params.tensor(id).shape() {
            return Err(Error::Shape {
                expected: self.params.tensor(id).shape().to_vec(),
                actual: table.shape().to_vec(),
            });
        }
        *self.params.tensor_mut(id) = table;
        Ok(())
    }

    pub fn encode_units(&self, units: &[String], tags: Vec<Tag>) -> EncodedSentence {
        EncodedSentence {
            chars: self.vocab.encode_chars(units),
            bigrams: self.vocab.encode_bigrams(units),
            tags,
        }
    }

    pub fn encode(&self, t: &TaggedSentence) -> EncodedSentence {
        self.encode_units(&t.chars, t.tags.clone())
    }

    /// Tags normalized units.
    pub fn predict(&self, units: &[String]) -> TaggedSentence {
        let enc = self.encode_units(units, Vec::new());
        TaggedSentence {
            chars: units.to_vec(),
            tags: self.net.predict_tags(&self.params, &enc),
        }
    }

    /// Segments normalized units into normalized words.
    pub fn segment_units(&self, units: &[String]) -> SegmentedSentence {
        let tagged = self.predict(units);
        let words = tag_spans(&tagged.tags)
            .into_iter()
            .map(|(a, b)| units[a..b].concat())
            .collect();
        SegmentedSentence { words }
    }

    /// Normalizes and tags a gold corpus and encodes it for training.
    pub fn encode_corpus(&self, corpus: &[SegmentedSentence]) -> Result<Vec<EncodedSentence>> {
        corpus.iter().map(|s| Ok(self.encode(&to_bmes(&normalize(s))?))).collect()
    }

    /// Word-level score of this model's segmentation of `gold`, both sides
    /// normalized.
    pub fn evaluate(&self, gold: &[SegmentedSentence]) -> Result<ScoreReport> {
        let gold: Vec<SegmentedSentence> = gold.iter().map(normalize).collect();
        let pred: Vec<SegmentedSentence> = gold.iter().map(|g| self.segment_units(&g.units())).collect();
        score(&gold, &pred)
    }

    /// Segments raw text, returning words in their original spelling.
    pub fn segment(&self, text: &str) -> SegmentedSentence {
        let units = normalize_units(text);
        let norm: Vec<String> = units.iter().map(|u| u.norm.clone()).collect();
        let tagged = self.predict(&norm);
        let words = tag_spans(&tagged.tags)
            .into_iter()
            .map(|(a, b)| units[a..b].iter().map(|u| u.raw.as_str()).collect())
            .collect();
        SegmentedSentence { words }
    }

    pub fn to_container(&self) -> Container {
        let c = &self.net.config;
        let meta = [
            ("format", "ugl-segmenter".to_string()),
            ("tags", "BMES".to_string()),
            ("dim", c.dim.to_string()),
            ("window", c.window.to_string()),
            ("filter", c.filter.to_string()),
            ("use_bigrams", c.use_bigrams.to_string()),
            ("vocab_hash", self.vocab.content_hash()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Container {
            meta,
            texts: vec![("vocab".to_string(), self.vocab.to_text())],
            tensors: self
                .params
                .names()
                .iter()
                .cloned()
                .zip(self.params.tensors().iter().cloned())
                .collect(),
        }
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        let meta = |k: &str| c.meta(k).ok_or_else(|| Error::Structure(format!("model lacks `{k}`")));
        let num = |k: &str| -> Result<usize> {
            meta(k)?
                .parse()
                .map_err(|_| Error::Structure(format!("model `{k}` is not a number")))
        };
        if meta("tags")? != "BMES" {
            return Err(Error::Structure("unsupported tag scheme".into()));
        }
        let vocab = Vocab::from_text(c.text("vocab").unwrap_or(""))?;
        if vocab.content_hash() != meta("vocab_hash")? {
            return Err(Error::Structure("vocabulary does not match its recorded hash".into()));
        }
        let config = ModelConfig {
            dim: num("dim")?,
            window: num("window")?,
            filter: num("filter")?,
            use_bigrams: meta("use_bigrams")? == "true",
            char_vocab: vocab.char_count(),
            bigram_vocab: vocab.bigram_count(),
        };
        let net = Network::new(config)?;
        let mut params = ParamStore::new();
        for (name, t) in &c.tensors {
            params.add(name, t.clone())?;
        }
        net.check_store(&params)?;
        Ok(UglModel { net, vocab, params })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.to_container().write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_container(&Container::read_from(file)?)
    }
}

#[cfg(test)]
mod tests;
