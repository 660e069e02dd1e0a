//! Chinese word segmentation with a gated global-local network.
//!
//! The crate covers the full pipeline: Bakeoff corpus handling and BMES
//! tagging ([`corpus`]), hand-differentiated dense numerics ([`nn`]), the
//! encoder/decoder tagger ([`model`]), serial and lock-free parallel Adam
//! training ([`ptrain`]), similarity-weighted teacher/student transfer
//! ([`transfer`]) and word-level scoring ([`eval`]).

pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod nn;
pub mod ptrain;
pub mod synth;
pub mod transfer;

pub use error::{Error, Result};
