//! Gated filter cell: merges `f` neighbouring d-vectors into one.
//!
//! ```text
//! r      = σ(G x + g_b)                 reset gates, x = [x_0; …; x_{f-1}]
//! h'     = tanh(W (r ⊙ x) + w_b)        new activation
//! z      = σ(U [h'; x] + u_b)           update gates [z_h; z_0; …; z_{f-1}]
//! out    = z_h ⊙ h' + Σ_i z_i ⊙ x_i
//! ```

use crate::nn::tensor::{affine, matvec_t_acc, outer_acc, sigmoid};

/// Borrowed weights of one cell. Shapes: `u` (f+1)d × (f+1)d, `w` d × fd,
/// `g` fd × fd, biases to match.
#[derive(Clone, Copy)]
pub struct GateView<'a> {
    pub dim: usize,
    pub filter: usize,
    pub u: &'a [f64],
    pub ub: &'a [f64],
    pub w: &'a [f64],
    pub wb: &'a [f64],
    pub g: &'a [f64],
    pub gb: &'a [f64],
}

/// Gradient buffers matching [`GateView`].
pub struct GateGrads<'a> {
    pub u: &'a mut [f64],
    pub ub: &'a mut [f64],
    pub w: &'a mut [f64],
    pub wb: &'a mut [f64],
    pub g: &'a mut [f64],
    pub gb: &'a mut [f64],
}

/// Forward values kept for the backward pass.
#[derive(Clone, Debug)]
pub struct GateCache {
    /// Concatenated inputs `[x_0; …; x_{f-1}]`.
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub rx: Vec<f64>,
    /// New activation h'.
    pub h: Vec<f64>,
    /// Update gates `[z_h; z_0; …]`.
    pub z: Vec<f64>,
    pub out: Vec<f64>,
}

/// Parameter shapes `(u, w, g)` for dimension `d` and filter `f`.
pub fn gate_shapes(d: usize, f: usize) -> ([usize; 2], [usize; 2], [usize; 2]) {
    ([(f + 1) * d, (f + 1) * d], [d, f * d], [f * d, f * d])
}

impl GateView<'_> {
    pub fn forward(&self, inputs: &[&[f64]]) -> GateCache {
        let (d, f) = (self.dim, self.filter);
        assert_eq!(inputs.len(), f, "gate cell expects {f} inputs");
        let x: Vec<f64> = inputs.concat();
        assert_eq!(x.len(), f * d);

        let mut r = vec![0.0; f * d];
        affine(self.g, self.gb, &x, &mut r);
        r.iter_mut().for_each(|v| *v = sigmoid(*v));
        let rx: Vec<f64> = r.iter().zip(&x).map(|(a, b)| a * b).collect();

        let mut h = vec![0.0; d];
        affine(self.w, self.wb, &rx, &mut h);
        h.iter_mut().for_each(|v| *v = v.tanh());

        let hx: Vec<f64> = h.iter().chain(&x).copied().collect();
        let mut z = vec![0.0; (f + 1) * d];
        affine(self.u, self.ub, &hx, &mut z);
        z.iter_mut().for_each(|v| *v = sigmoid(*v));

        // z and hx share the layout [h'; x_0; …], so the output is the sum of
        // the f+1 blocks of z ⊙ hx.
        let mut out = vec![0.0; d];
        for (k, (zv, hv)) in z.iter().zip(&hx).enumerate() {
            out[k % d] += zv * hv;
        }
        GateCache { x, r, rx, h, z, out }
    }

    /// Accumulates parameter gradients into `grads` and input gradients
    /// (length fd) into `dx`.
    pub fn backward(&self, cache: &GateCache, dout: &[f64], grads: &mut GateGrads<'_>, dx: &mut [f64]) {
        let (d, f) = (self.dim, self.filter);
        let hx: Vec<f64> = cache.h.iter().chain(&cache.x).copied().collect();

        // out = Σ_blocks z ⊙ hx
        let mut dhx = vec![0.0; (f + 1) * d];
        let mut dz_pre = vec![0.0; (f + 1) * d];
        for k in 0..(f + 1) * d {
            let g = dout[k % d];
            dhx[k] = g * cache.z[k];
            let z = cache.z[k];
            dz_pre[k] = g * hx[k] * z * (1.0 - z);
        }
        outer_acc(grads.u, &dz_pre, &hx);
        crate::nn::tensor::add_assign(grads.ub, &dz_pre);
        matvec_t_acc(self.u, &dz_pre, &mut dhx);

        let (dh, dx_direct) = dhx.split_at(d);
        crate::nn::tensor::add_assign(dx, dx_direct);

        let dh_pre: Vec<f64> = dh.iter().zip(&cache.h).map(|(g, h)| g * (1.0 - h * h)).collect();
        outer_acc(grads.w, &dh_pre, &cache.rx);
        crate::nn::tensor::add_assign(grads.wb, &dh_pre);
        let mut drx = vec![0.0; f * d];
        matvec_t_acc(self.w, &dh_pre, &mut drx);

        let mut dr_pre = vec![0.0; f * d];
        for k in 0..f * d {
            let r = cache.r[k];
            dx[k] += drx[k] * r;
            dr_pre[k] = drx[k] * cache.x[k] * r * (1.0 - r);
        }
        outer_acc(grads.g, &dr_pre, &cache.x);
        crate::nn::tensor::add_assign(grads.gb, &dr_pre);
        matvec_t_acc(self.g, &dr_pre, dx);
    }
}
