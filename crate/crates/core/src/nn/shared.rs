//! Lock-free shared parameter storage for asynchronous training.
//!
//! Every scalar lives in its own `AtomicU64` holding the bit pattern of an
//! `f64`. Loads and stores are `Relaxed`: a single scalar is never torn,
//! but nothing is ordered across scalars and a read-modify-write from two
//! workers can lose one of the updates. Those races show up only as noise
//! in the parameter values.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use super::params::{ParamRead, ParamStore, ParamWrite};
use super::tensor::Tensor;

pub struct SharedParams {
    values: Vec<Box<[AtomicU64]>>,
    shapes: Vec<Vec<usize>>,
}

impl SharedParams {
    pub fn from_store(store: &ParamStore) -> Self {
        let values = store
            .tensors()
            .iter()
            .map(|t| t.data().iter().map(|x| AtomicU64::new(x.to_bits())).collect())
            .collect();
        let shapes = store.tensors().iter().map(|t| t.shape().to_vec()).collect();
        SharedParams { values, shapes }
    }

    #[inline]
    pub fn load(&self, id: usize, idx: usize) -> f64 {
        f64::from_bits(self.values[id][idx].load(Ordering::Relaxed))
    }

    #[inline]
    pub fn store(&self, id: usize, idx: usize, x: f64) {
        self.values[id][idx].store(x.to_bits(), Ordering::Relaxed);
    }

    fn load_range(&self, id: usize, start: usize, len: usize) -> Vec<f64> {
        self.values[id][start..start + len]
            .iter()
            .map(|a| f64::from_bits(a.load(Ordering::Relaxed)))
            .collect()
    }

    /// Racy copy of the current values: dense parameters in full, and for
    /// each `(id, rows)` in `sparse` only the listed rows.
    pub fn snapshot(&self, sparse: &[(usize, Vec<usize>)]) -> Snapshot {
        let dense: Vec<Option<Vec<f64>>> = (0..self.values.len())
            .map(|id| {
                (!sparse.iter().any(|(s, _)| *s == id)).then(|| self.load_range(id, 0, self.values[id].len()))
            })
            .collect();
        let mut rows = HashMap::new();
        for (id, wanted) in sparse {
            let width = self.shapes[*id].last().copied().unwrap_or(1);
            for &r in wanted {
                rows.entry((*id, r))
                    .or_insert_with(|| self.load_range(*id, r * width, width));
            }
        }
        Snapshot { dense, rows }
    }

    /// Copies the values back into `store`, whose layout must match.
    pub fn write_back(&self, store: &mut ParamStore) {
        for id in 0..self.values.len() {
            let t: &mut Tensor = store.tensor_mut(id);
            for (x, a) in t.data_mut().iter_mut().zip(self.values[id].iter()) {
                *x = f64::from_bits(a.load(Ordering::Relaxed));
            }
        }
    }

    pub fn writer(&self) -> SharedWriter<'_> {
        SharedWriter(self)
    }
}

/// Optimizer target that races on the shared values.
pub struct SharedWriter<'a>(&'a SharedParams);

impl ParamWrite for SharedWriter<'_> {
    fn subtract(&mut self, id: usize, offset: usize, delta: &[f64]) {
        for (i, d) in delta.iter().enumerate() {
            let cur = self.0.load(id, offset + i);
            self.0.store(id, offset + i, cur - d);
        }
    }
}

/// Worker-private copy of shared parameters.
pub struct Snapshot {
    dense: Vec<Option<Vec<f64>>>,
    rows: HashMap<(usize, usize), Vec<f64>>,
}

impl ParamRead for Snapshot {
    fn values(&self, id: usize) -> &[f64] {
        self.dense[id]
            .as_deref()
            .unwrap_or_else(|| panic!("parameter {id} was snapshotted by rows only"))
    }

    fn row(&self, id: usize, row: usize, width: usize) -> &[f64] {
        match &self.dense[id] {
            Some(v) => &v[row * width..(row + 1) * width],
            None => self
                .rows
                .get(&(id, row))
                .unwrap_or_else(|| panic!("row {row} of parameter {id} not in snapshot")),
        }
    }
}
