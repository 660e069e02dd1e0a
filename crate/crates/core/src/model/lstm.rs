//! Single-direction LSTM with gate order `[i, f, g, o]`.

use crate::nn::tensor::{add_assign, matvec_acc, matvec_t_acc, outer_acc, sigmoid};

#[derive(Clone, Copy)]
pub struct LstmView<'a> {
    pub hidden: usize,
    /// 4h × input
    pub wx: &'a [f64],
    /// 4h × h
    pub wh: &'a [f64],
    /// 4h
    pub b: &'a [f64],
}

pub struct LstmGrads<'a> {
    pub wx: &'a mut [f64],
    pub wh: &'a mut [f64],
    pub b: &'a mut [f64],
}

#[derive(Clone, Debug, Default)]
pub struct LstmCache {
    /// Post-activation gates per step, `[i, f, g, o]`.
    pub gates: Vec<Vec<f64>>,
    pub cells: Vec<Vec<f64>>,
    pub hidden: Vec<Vec<f64>>,
}

impl LstmView<'_> {
    pub fn forward(&self, xs: &[Vec<f64>]) -> LstmCache {
        let h = self.hidden;
        let mut cache = LstmCache::default();
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        for x in xs {
            let mut a = self.b.to_vec();
            matvec_acc(self.wx, x, &mut a);
            matvec_acc(self.wh, &h_prev, &mut a);
            for (k, v) in a.iter_mut().enumerate() {
                *v = if k / h == 2 { v.tanh() } else { sigmoid(*v) };
            }
            let (i, rest) = a.split_at(h);
            let (f, rest) = rest.split_at(h);
            let (g, o) = rest.split_at(h);
            let c: Vec<f64> = (0..h).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
            let hn: Vec<f64> = (0..h).map(|k| o[k] * c[k].tanh()).collect();
            cache.gates.push(a);
            cache.cells.push(c.clone());
            cache.hidden.push(hn.clone());
            h_prev = hn;
            c_prev = c;
        }
        cache
    }

    /// Backpropagation through time. `d_hidden[t]` is the loss gradient
    /// with respect to the output at step `t`; returns input gradients.
    pub fn backward(
        &self,
        cache: &LstmCache,
        xs: &[Vec<f64>],
        d_hidden: &[Vec<f64>],
        grads: &mut LstmGrads<'_>,
    ) -> Vec<Vec<f64>> {
        let h = self.hidden;
        let n = xs.len();
        let zero = vec![0.0; h];
        let mut dxs = vec![vec![0.0; xs.first().map_or(0, Vec::len)]; n];
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut da = vec![0.0; 4 * h];
        for t in (0..n).rev() {
            let gates = &cache.gates[t];
            let (i, f, g, o) = (&gates[..h], &gates[h..2 * h], &gates[2 * h..3 * h], &gates[3 * h..]);
            let c = &cache.cells[t];
            let c_prev = if t > 0 { &cache.cells[t - 1] } else { &zero };
            let h_prev = if t > 0 { &cache.hidden[t - 1] } else { &zero };
            for k in 0..h {
                let dh = d_hidden[t][k] + dh_next[k];
                let tc = c[k].tanh();
                let dc = dh * o[k] * (1.0 - tc * tc) + dc_next[k];
                da[k] = dc * g[k] * i[k] * (1.0 - i[k]);
                da[h + k] = dc * c_prev[k] * f[k] * (1.0 - f[k]);
                da[2 * h + k] = dc * i[k] * (1.0 - g[k] * g[k]);
                da[3 * h + k] = dh * tc * o[k] * (1.0 - o[k]);
                dc_next[k] = dc * f[k];
            }
            outer_acc(grads.wx, &da, &xs[t]);
            outer_acc(grads.wh, &da, h_prev);
            add_assign(grads.b, &da);
            matvec_t_acc(self.wx, &da, &mut dxs[t]);
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            matvec_t_acc(self.wh, &da, &mut dh_next);
        }
        dxs
    }
}
