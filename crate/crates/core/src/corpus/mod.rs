//! Corpus ingestion: Bakeoff-format reading, normalization, BMES tagging,
//! vocabularies and pretrained embedding tables.

pub(crate) mod bmes;
mod embed;
mod vocab;

use std::fmt;
use std::path::Path;

pub use bmes::{from_bmes, tag_spans, tags_valid, to_bmes, Tag, TaggedSentence};
pub use embed::{load_embeddings, parse_embeddings};
pub use vocab::{build_vocab, Vocab, DEFAULT_BIGRAM_MIN_COUNT};

use crate::error::{Error, Result};

pub const PAD: &str = "⟨PAD⟩";
pub const UNK: &str = "⟨UNK⟩";
pub const NUM: &str = "⟨NUM⟩";
pub const LATIN: &str = "⟨LATIN⟩";

/// Symbols that are a single unit even though they span several chars.
pub const RESERVED: [&str; 4] = [PAD, UNK, NUM, LATIN];

/// A sentence as a sequence of words.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SegmentedSentence {
    pub words: Vec<String>,
}

impl SegmentedSentence {
    pub fn new<S: Into<String>>(words: impl IntoIterator<Item = S>) -> Self {
        SegmentedSentence {
            words: words.into_iter().map(Into::into).collect(),
        }
    }

    /// Units of the whole sentence, in order.
    pub fn units(&self) -> Vec<String> {
        self.words.iter().flat_map(|w| split_units(w)).collect()
    }

    pub fn unit_count(&self) -> usize {
        self.words.iter().map(|w| split_units(w).len()).sum()
    }
}

impl fmt::Display for SegmentedSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.words.join(" "))
    }
}

/// Splits a word into units: single characters, except that reserved
/// symbols such as `⟨NUM⟩` stay whole.
pub fn split_units(word: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = word;
    'outer: while let Some(c) = rest.chars().next() {
        if c == '⟨' {
            for sym in RESERVED {
                if rest.starts_with(sym) {
                    out.push(sym.to_string());
                    rest = &rest[sym.len()..];
                    continue 'outer;
                }
            }
        }
        out.push(c.to_string());
        rest = &rest[c.len_utf8()..];
    }
    out
}

/// Parses a Bakeoff document: one sentence per line, words separated by
/// whitespace. Blank lines are skipped.
pub fn read_bakeoff(bytes: &[u8]) -> Result<Vec<SegmentedSentence>> {
    let mut out = Vec::new();
    for (idx, line) in bytes.split(|&b| b == b'\n').enumerate() {
        let line = std::str::from_utf8(line).map_err(|_| Error::Decode { line: idx + 1 })?;
        let words: Vec<&str> = line.split_whitespace().collect();
        if !words.is_empty() {
            out.push(SegmentedSentence::new(words));
        }
    }
    Ok(out)
}

pub fn read_bakeoff_file(path: impl AsRef<Path>) -> Result<Vec<SegmentedSentence>> {
    read_bakeoff(&std::fs::read(path)?)
}

pub fn write_bakeoff(sentences: &[SegmentedSentence]) -> String {
    let mut s = String::new();
    for sent in sentences {
        s.push_str(&sent.to_string());
        s.push('\n');
    }
    s
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Digit,
    Latin,
    Other,
}

fn classify(c: char) -> CharClass {
    match c {
        '0'..='9' | '０'..='９' => CharClass::Digit,
        'a'..='z' | 'A'..='Z' | 'ａ'..='ｚ' | 'Ａ'..='Ｚ' => CharClass::Latin,
        _ => CharClass::Other,
    }
}

/// A normalized unit together with the raw text it stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawUnit {
    pub norm: String,
    pub raw: String,
}

/// Splits raw text into normalized units. Digit runs collapse to `⟨NUM⟩`,
/// Latin-letter runs to `⟨LATIN⟩`; whitespace is dropped; reserved
/// symbols already present pass through untouched.
pub fn normalize_units(text: &str) -> Vec<RawUnit> {
    let mut out: Vec<RawUnit> = Vec::new();
    let mut run_class = CharClass::Other;
    for unit in split_units(text) {
        if RESERVED.contains(&unit.as_str()) {
            out.push(RawUnit {
                norm: unit.clone(),
                raw: unit,
            });
            run_class = CharClass::Other;
            continue;
        }
        let c = unit.chars().next().expect("units are non-empty");
        if c.is_whitespace() {
            run_class = CharClass::Other;
            continue;
        }
        let class = classify(c);
        match class {
            CharClass::Other => out.push(RawUnit {
                norm: unit.clone(),
                raw: unit,
            }),
            _ if class == run_class => out.last_mut().expect("open run").raw.push(c),
            _ => out.push(RawUnit {
                norm: if class == CharClass::Digit { NUM } else { LATIN }.to_string(),
                raw: unit,
            }),
        }
        run_class = class;
    }
    out
}

fn normalize_word(word: &str) -> String {
    normalize_units(word).into_iter().map(|u| u.norm).collect()
}

/// Replaces each maximal digit run with `⟨NUM⟩` and each maximal Latin
/// letter run with `⟨LATIN⟩`, word by word.
pub fn normalize(s: &SegmentedSentence) -> SegmentedSentence {
    SegmentedSentence {
        words: s.words.iter().map(|w| normalize_word(w)).collect(),
    }
}
