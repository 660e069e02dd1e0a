use std::collections::{BTreeMap, HashMap};

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Read access to parameter values by id.
pub trait ParamRead {
    fn values(&self, id: usize) -> &[f64];

    /// One row of a 2-d parameter of the given row width.
    fn row(&self, id: usize, row: usize, width: usize) -> &[f64] {
        &self.values(id)[row * width..(row + 1) * width]
    }
}

/// Write access used by optimizers: subtract `delta` from the values of
/// parameter `id` starting at `offset`.
pub trait ParamWrite {
    fn subtract(&mut self, id: usize, offset: usize, delta: &[f64]);
}

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamHyper {
    pub fn with_lr(self, lr: f64) -> Self {
        AdamHyper { lr, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Adam hyperparameters {self:?}")))
        }
    }
}

/// Gradient of one parameter: either dense, or a set of touched rows of
/// an embedding table.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamGrad {
    Dense(Vec<f64>),
    Rows(BTreeMap<usize, Vec<f64>>),
}

impl ParamGrad {
    fn values(&self) -> Box<dyn Iterator<Item = &f64> + '_> {
        match self {
            ParamGrad::Dense(v) => Box::new(v.iter()),
            ParamGrad::Rows(rows) => Box::new(rows.values().flatten()),
        }
    }

    fn values_mut(&mut self) -> Box<dyn Iterator<Item = &mut f64> + '_> {
        match self {
            ParamGrad::Dense(v) => Box::new(v.iter_mut()),
            ParamGrad::Rows(rows) => Box::new(rows.values_mut().flatten()),
        }
    }
}

/// Gradients indexed by parameter id. Missing entries are zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradSet {
    entries: Vec<Option<ParamGrad>>,
}

impl GradSet {
    pub fn new(param_count: usize) -> Self {
        GradSet {
            entries: vec![None; param_count],
        }
    }

    pub fn get(&self, id: usize) -> Option<&ParamGrad> {
        self.entries.get(id).and_then(Option::as_ref)
    }

    pub fn set(&mut self, id: usize, grad: ParamGrad) {
        self.entries[id] = Some(grad);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.iter().all(Option::is_none)
    }

    /// Dense gradient buffer for `id`, zero-initialised on first use.
    pub fn dense_mut(&mut self, id: usize, len: usize) -> &mut [f64] {
        let slot = self.entries[id].get_or_insert_with(|| ParamGrad::Dense(vec![0.0; len]));
        match slot {
            ParamGrad::Dense(v) => v,
            ParamGrad::Rows(_) => panic!("parameter {id} holds row gradients"),
        }
    }

    /// Removes the dense buffer for `id` (zeros if absent) so it can be
    /// borrowed alongside others; return it with [`GradSet::put_dense`].
    pub fn take_dense(&mut self, id: usize, len: usize) -> Vec<f64> {
        match self.entries[id].take() {
            None => vec![0.0; len],
            Some(ParamGrad::Dense(v)) => v,
            Some(ParamGrad::Rows(_)) => panic!("parameter {id} holds row gradients"),
        }
    }

    pub fn put_dense(&mut self, id: usize, v: Vec<f64>) {
        self.entries[id] = Some(ParamGrad::Dense(v));
    }

    /// Several dense buffers at once. Each id must be distinct and already
    /// initialised through [`GradSet::dense_mut`].
    pub fn dense_disjoint_mut<const N: usize>(&mut self, ids: [usize; N]) -> [&mut [f64]; N] {
        let slots = self
            .entries
            .get_disjoint_mut(ids)
            .expect("gradient ids must be distinct and in range");
        slots.map(|slot| match slot {
            Some(ParamGrad::Dense(v)) => v.as_mut_slice(),
            _ => panic!("dense gradient buffer not initialised"),
        })
    }

    /// Row gradient buffer, zero-initialised on first use.
    pub fn row_mut(&mut self, id: usize, row: usize, width: usize) -> &mut [f64] {
        let slot = self.entries[id].get_or_insert_with(|| ParamGrad::Rows(BTreeMap::new()));
        match slot {
            ParamGrad::Rows(rows) => rows.entry(row).or_insert_with(|| vec![0.0; width]),
            ParamGrad::Dense(_) => panic!("parameter {id} holds a dense gradient"),
        }
    }

    /// Value of coordinate `idx` (flat index) of parameter `id`.
    pub fn coordinate(&self, id: usize, idx: usize, width: usize) -> f64 {
        match self.get(id) {
            None => 0.0,
            Some(ParamGrad::Dense(v)) => v[idx],
            Some(ParamGrad::Rows(rows)) => rows.get(&(idx / width)).map_or(0.0, |r| r[idx % width]),
        }
    }

    pub fn scale(&mut self, s: f64) {
        for g in self.entries.iter_mut().flatten() {
            for x in g.values_mut() {
                *x *= s;
            }
        }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, other: &GradSet, s: f64) {
        for (id, g) in other.entries.iter().enumerate() {
            match g {
                None => {}
                Some(ParamGrad::Dense(v)) => {
                    for (d, x) in self.dense_mut(id, v.len()).iter_mut().zip(v) {
                        *d += s * x;
                    }
                }
                Some(ParamGrad::Rows(rows)) => {
                    for (&r, v) in rows {
                        for (d, x) in self.row_mut(id, r, v.len()).iter_mut().zip(v) {
                            *d += s * x;
                        }
                    }
                }
            }
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .flat_map(|g| g.values())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales so the global L2 norm is at most `max_norm`; returns the
    /// norm before clipping.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.global_norm();
        if norm > max_norm {
            self.scale(max_norm / norm);
        }
        norm
    }

    /// Index of the first parameter holding a NaN or infinite value.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.entries
            .iter()
            .position(|g| g.as_ref().is_some_and(|g| g.values().any(|x| !x.is_finite())))
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdamMoments {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamMoments {
    pub fn for_shapes(lens: impl IntoIterator<Item = usize>) -> Self {
        let (m, v) = lens.into_iter().map(|n| (vec![0.0; n], vec![0.0; n])).unzip();
        AdamMoments { m, v, step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first(&self, id: usize) -> &[f64] {
        &self.m[id]
    }

    pub fn second(&self, id: usize) -> &[f64] {
        &self.v[id]
    }

    fn push(&mut self, len: usize) {
        self.m.push(vec![0.0; len]);
        self.v.push(vec![0.0; len]);
    }

    /// One bias-corrected Adam update. Only parameters (and, for row
    /// gradients, only rows) present in `grads` change. The caller has
    /// already rejected non-finite gradients.
    pub fn apply(&mut self, target: &mut impl ParamWrite, grads: &GradSet, h: &AdamHyper) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - h.beta1.powi(t);
        let c2 = 1.0 - h.beta2.powi(t);
        let mut delta = Vec::new();
        for (id, g) in grads.entries.iter().enumerate() {
            let Some(g) = g else { continue };
            let (m, v) = (&mut self.m[id], &mut self.v[id]);
            let mut update = |offset: usize, g: &[f64]| {
                delta.clear();
                let ms = &mut m[offset..offset + g.len()];
                let vs = &mut v[offset..offset + g.len()];
                for ((mi, vi), &gi) in ms.iter_mut().zip(vs.iter_mut()).zip(g) {
                    *mi = h.beta1 * *mi + (1.0 - h.beta1) * gi;
                    *vi = h.beta2 * *vi + (1.0 - h.beta2) * gi * gi;
                    let m_hat = *mi / c1;
                    let v_hat = *vi / c2;
                    delta.push(h.lr * m_hat / (v_hat.sqrt() + h.eps));
                }
                target.subtract(id, offset, &delta);
            };
            match g {
                ParamGrad::Dense(gv) => update(0, gv),
                ParamGrad::Rows(rows) => {
                    for (&r, gv) in rows {
                        update(r * gv.len(), gv);
                    }
                }
            }
        }
    }
}

impl ParamWrite for Vec<Tensor> {
    fn subtract(&mut self, id: usize, offset: usize, delta: &[f64]) {
        let data = &mut self[id].data_mut()[offset..offset + delta.len()];
        for (x, d) in data.iter_mut().zip(delta) {
            *x -= d;
        }
    }
}

/// Named parameter tensors with Adam state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    index: HashMap<String, usize>,
    values: Vec<Tensor>,
    moments: AdamMoments,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a parameter and returns its id.
    pub fn add(&mut self, name: &str, value: Tensor) -> Result<usize> {
        if self.index.contains_key(name) {
            return Err(Error::Structure(format!("duplicate parameter `{name}`")));
        }
        let id = self.values.len();
        self.moments.push(value.len());
        self.index.insert(name.to_string(), id);
        self.names.push(name.to_string());
        self.values.push(value);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.id(name).map(|id| &self.values[id])
    }

    pub fn tensor(&self, id: usize) -> &Tensor {
        &self.values[id]
    }

    pub fn tensor_mut(&mut self, id: usize) -> &mut Tensor {
        &mut self.values[id]
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.values
    }

    pub fn moments(&self) -> &AdamMoments {
        &self.moments
    }

    pub fn set_moments(&mut self, moments: AdamMoments) {
        self.moments = moments;
    }

    pub fn step_count(&self) -> u64 {
        self.moments.step
    }

    pub fn grad_set(&self) -> GradSet {
        GradSet::new(self.len())
    }

    /// Builds a gradient set from named dense tensors.
    pub fn named_grads<'a>(&self, grads: impl IntoIterator<Item = (&'a str, Tensor)>) -> Result<GradSet> {
        let mut set = self.grad_set();
        for (name, g) in grads {
            let id = self.id(name).ok_or_else(|| Error::UnknownParam(name.to_string()))?;
            if g.shape() != self.values[id].shape() {
                return Err(Error::Shape {
                    expected: self.values[id].shape().to_vec(),
                    actual: g.shape().to_vec(),
                });
            }
            set.set(id, ParamGrad::Dense(g.into_data()));
        }
        Ok(set)
    }

    /// Rejects gradients containing NaN or infinity, naming the parameter.
    pub fn check_finite(&self, grads: &GradSet) -> Result<()> {
        match grads.first_non_finite() {
            Some(id) => Err(Error::NonFiniteGradient {
                name: self.names[id].clone(),
            }),
            None => Ok(()),
        }
    }

    /// Standard Adam with bias correction; increments the step counter once.
    pub fn adam_step(&mut self, grads: &GradSet, h: &AdamHyper) -> Result<()> {
        if grads.len() != self.len() {
            return Err(Error::Structure(format!(
                "gradient set covers {} parameters, store has {}",
                grads.len(),
                self.len()
            )));
        }
        self.check_finite(grads)?;
        self.moments.apply(&mut self.values, grads, h);
        Ok(())
    }
}

impl ParamRead for ParamStore {
    fn values(&self, id: usize) -> &[f64] {
        self.values[id].data()
    }
}
