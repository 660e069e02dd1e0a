//! Filter-recursive encoder.
//!
//! Each layer applies its gate cell to every width-`f` patch of the
//! previous layer, shrinking a width-`k` window by `f − 1` until one vector
//! per character remains.
//!
//! Two routes compute the same result. [`encoder_forward_windows`] follows
//! the window layout literally: `H⁰[i][j]` is input `i + j` of the padded
//! sequence, and every position keeps its own `k`-wide stack. Because a
//! layer-`l` cell at `(i, j)` only depends on padded inputs
//! `i + j … i + j + l(f−1)`, cells with equal `i + j` coincide, so
//! [`encode_sequence`] computes each distinct cell once over the padded
//! sequence. Training uses the shared route.

use super::gate::{GateCache, GateGrads, GateView};
use crate::nn::Tensor;

/// Window context `H⁰` (n × k × d) from the padded input sequence of length
/// `n + k − 1`: `H⁰[i][j] = padded[i + j]`.
pub fn window_context(padded: &[Vec<f64>], k: usize) -> Tensor {
    let d = padded.first().map_or(0, Vec::len);
    let n = (padded.len() + 1).saturating_sub(k);
    let mut data = Vec::with_capacity(n * k * d);
    for i in 0..n {
        for j in 0..k {
            data.extend_from_slice(&padded[i + j]);
        }
    }
    Tensor::new(vec![n, k, d], data).expect("window shape")
}

/// Literal per-window encoder: `H⁰` (n × k × d) to `Hᴸ` (n × d).
pub fn encoder_forward_windows(h0: &Tensor, layers: &[GateView<'_>]) -> Tensor {
    let (n, k, d) = match h0.shape() {
        &[n, k, d] => (n, k, d),
        s => panic!("window context must be 3-d, got {s:?}"),
    };
    let mut out = Vec::with_capacity(n * d);
    for i in 0..n {
        let mut level: Vec<Vec<f64>> = (0..k)
            .map(|j| h0.data()[(i * k + j) * d..(i * k + j + 1) * d].to_vec())
            .collect();
        for layer in layers {
            let f = layer.filter;
            level = (0..=level.len() - f)
                .map(|j| {
                    let inputs: Vec<&[f64]> = level[j..j + f].iter().map(Vec::as_slice).collect();
                    layer.forward(&inputs).out
                })
                .collect();
        }
        assert_eq!(level.len(), 1, "layers do not reduce width {k} to 1");
        out.extend_from_slice(&level[0]);
    }
    Tensor::new(vec![n, d], out).expect("encoder output shape")
}

/// Activations of the shared-cell encoder.
#[derive(Clone, Debug)]
pub struct EncoderCache {
    /// `levels[0]` is the padded input; `levels[l]` has `f − 1` fewer
    /// vectors than `levels[l − 1]`.
    pub levels: Vec<Vec<Vec<f64>>>,
    pub cells: Vec<Vec<GateCache>>,
}

impl EncoderCache {
    pub fn output(&self) -> &[Vec<f64>] {
        self.levels.last().expect("at least the input level")
    }
}

pub fn encode_sequence(padded: Vec<Vec<f64>>, layers: &[GateView<'_>]) -> EncoderCache {
    let mut levels = vec![padded];
    let mut cells = Vec::with_capacity(layers.len());
    for layer in layers {
        let prev = levels.last().expect("input level");
        let f = layer.filter;
        let caches: Vec<GateCache> = (0..=prev.len().saturating_sub(f))
            .filter(|_| prev.len() >= f)
            .map(|s| {
                let inputs: Vec<&[f64]> = prev[s..s + f].iter().map(Vec::as_slice).collect();
                layer.forward(&inputs)
            })
            .collect();
        levels.push(caches.iter().map(|c| c.out.clone()).collect());
        cells.push(caches);
    }
    EncoderCache { levels, cells }
}

/// Backpropagates `d_out` (one vector per output position) through the
/// encoder. `grads[l]` receives layer `l`'s parameter gradients; returns
/// the gradient with respect to each padded input vector.
pub fn encode_backward(
    cache: &EncoderCache,
    layers: &[GateView<'_>],
    grads: &mut [GateGrads<'_>],
    d_out: Vec<Vec<f64>>,
) -> Vec<Vec<f64>> {
    let mut upper = d_out;
    for (l, layer) in layers.iter().enumerate().rev() {
        let d = layer.dim;
        let f = layer.filter;
        let mut lower = vec![vec![0.0; d]; cache.levels[l].len()];
        let mut dx = vec![0.0; f * d];
        for (s, cell) in cache.cells[l].iter().enumerate() {
            dx.iter_mut().for_each(|v| *v = 0.0);
            layer.backward(cell, &upper[s], &mut grads[l], &mut dx);
            for (q, chunk) in dx.chunks(d).enumerate() {
                crate::nn::tensor::add_assign(&mut lower[s + q], chunk);
            }
        }
        upper = lower;
    }
    upper
}
