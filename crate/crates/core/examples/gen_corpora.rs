//! Writes the synthetic corpora in Bakeoff format:
//! `toy.utf8`, `high.utf8`, `low.utf8` and `low_dev.utf8`.
//!
//! Usage: `cargo run --example gen_corpora -- [OUT_DIR] [SEED]`

use std::path::PathBuf;

use uglseg::corpus::write_bakeoff;
use uglseg::synth::{toy_corpus, transfer_task, TOY_SENTENCES};

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data".into()));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed is an integer"));
    std::fs::create_dir_all(&dir)?;
    let task = transfer_task(seed);
    for (name, corpus) in [
        ("toy.utf8", toy_corpus(seed, TOY_SENTENCES)),
        ("high.utf8", task.high),
        ("low.utf8", task.low),
        ("low_dev.utf8", task.low_dev),
    ] {
        std::fs::write(dir.join(name), write_bakeoff(&corpus))?;
    }
    println!("wrote corpora to {}", dir.display());
    Ok(())
}
