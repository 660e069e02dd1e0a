//! Constrained best-path decoding over BMES transitions.

use crate::corpus::Tag;

/// Highest-scoring tag sequence under the hard BMES constraints, where a
/// path's score is the sum of its per-position scores. Any `n ≥ 1` has a
/// feasible path (all `S`), so the result is always structurally valid.
/// Ties go to the lower tag index.
pub fn constrained_decode(scores: &[[f64; 4]]) -> Vec<Tag> {
    let n = scores.len();
    if n == 0 {
        return Vec::new();
    }
    let mut best = [f64::NEG_INFINITY; 4];
    for t in Tag::ALL {
        if t.can_start() {
            best[t.index()] = scores[0][t.index()];
        }
    }
    let mut back = vec![[0usize; 4]; n];
    for i in 1..n {
        let mut next = [f64::NEG_INFINITY; 4];
        for cur in Tag::ALL {
            for prev in Tag::ALL {
                if !prev.can_precede(cur) || best[prev.index()] == f64::NEG_INFINITY {
                    continue;
                }
                let cand = best[prev.index()] + scores[i][cur.index()];
                if cand > next[cur.index()] {
                    next[cur.index()] = cand;
                    back[i][cur.index()] = prev.index();
                }
            }
        }
        best = next;
    }
    let mut last = Tag::S;
    let mut top = f64::NEG_INFINITY;
    for t in Tag::ALL {
        if t.can_end() && best[t.index()] > top {
            top = best[t.index()];
            last = t;
        }
    }
    let mut tags = vec![last; n];
    for i in (1..n).rev() {
        let prev = back[i][tags[i].index()];
        tags[i - 1] = Tag::from_index(prev).expect("tag index");
    }
    tags
}
