use std::collections::HashMap;

use super::{Vocab, UNK};
use crate::error::{Error, Result};
use crate::nn::rng;
use crate::nn::Tensor;

/// RNG stream for embedding rows missing from the file.
const FALLBACK_STREAM: u64 = 0x454d_4245;
pub const FALLBACK_BOUND: f64 = 0.05;

/// Parses word2vec text format: optional `count dim` header, then
/// `token f1 … fd` rows.
pub fn parse_embeddings(text: &str, dim: usize) -> Result<HashMap<String, Vec<f64>>> {
    let mut rows = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if idx == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
            let header_dim: usize = fields[1].parse().expect("checked");
            if header_dim != dim {
                return Err(Error::Format {
                    line: line_no,
                    msg: format!("header dimension {header_dim}, expected {dim}"),
                });
            }
            continue;
        }
        let (token, values) = fields.split_first().expect("non-empty");
        if values.len() != dim {
            return Err(Error::Format {
                line: line_no,
                msg: format!("dimension mismatch: {} values, expected {dim}", values.len()),
            });
        }
        let vec = values
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Format {
                line: line_no,
                msg: format!("malformed float: {e}"),
            })?;
        rows.insert(token.to_string(), vec);
    }
    Ok(rows)
}

/// Character embedding table with one row per vocab entry. Entries absent
/// from the file take the file's `⟨UNK⟩` row, or a uniform draw in
/// `[-0.05, 0.05]` from `seed` when the file has no `⟨UNK⟩` row either.
pub fn load_embeddings(text: &str, vocab: &Vocab, dim: usize, seed: u64) -> Result<Tensor> {
    let file = parse_embeddings(text, dim)?;
    let unk = file.get(UNK);
    let mut rng = rng::stream(seed, FALLBACK_STREAM);
    let mut table = Tensor::zeros(&[vocab.char_count(), dim]);
    for (i, c) in vocab.chars().iter().enumerate() {
        let row = table.row_mut(i);
        match file.get(c).or(unk) {
            Some(v) => row.copy_from_slice(v),
            None => rng::fill_uniform(&mut rng, row, FALLBACK_BOUND),
        }
    }
    Ok(table)
}
