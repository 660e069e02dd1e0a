use std::collections::{BTreeMap, BTreeSet, HashMap};

use sha2::{Digest, Sha256};

use super::{TaggedSentence, LATIN, NUM, PAD, UNK};

/// Bigrams seen fewer times than this are dropped.
pub const DEFAULT_BIGRAM_MIN_COUNT: usize = 3;

/// Character and bigram id maps. Ids 0..4 of the character map are always
/// PAD, UNK, NUM, LATIN; ids 0 and 1 of the bigram map are PAD and UNK.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    chars: Vec<String>,
    char_to_id: HashMap<String, usize>,
    bigrams: Vec<(String, String)>,
    bigram_to_id: HashMap<(String, String), usize>,
}

impl Vocab {
    pub const PAD_ID: usize = 0;
    pub const UNK_ID: usize = 1;
    pub const NUM_ID: usize = 2;
    pub const LATIN_ID: usize = 3;
    pub const RESERVED_CHARS: usize = 4;
    pub const BIGRAM_PAD_ID: usize = 0;
    pub const BIGRAM_UNK_ID: usize = 1;
    pub const RESERVED_BIGRAMS: usize = 2;

    /// Builds a vocab from explicit (non-reserved) entries, in the given order.
    pub fn from_entries(
        chars: impl IntoIterator<Item = String>,
        bigrams: impl IntoIterator<Item = (String, String)>,
    ) -> Self {
        let mut v = Vocab {
            chars: Vec::new(),
            char_to_id: HashMap::new(),
            bigrams: Vec::new(),
            bigram_to_id: HashMap::new(),
        };
        for c in [PAD, UNK, NUM, LATIN].into_iter().map(String::from).chain(chars) {
            if !v.char_to_id.contains_key(&c) {
                v.char_to_id.insert(c.clone(), v.chars.len());
                v.chars.push(c);
            }
        }
        let reserved = [(PAD.to_string(), PAD.to_string()), (UNK.to_string(), UNK.to_string())];
        for b in reserved.into_iter().chain(bigrams) {
            if !v.bigram_to_id.contains_key(&b) {
                v.bigram_to_id.insert(b.clone(), v.bigrams.len());
                v.bigrams.push(b);
            }
        }
        v
    }

    /// Number of character entries, reserved symbols included.
    pub fn char_count(&self) -> usize {
        self.chars.len()
    }

    pub fn bigram_count(&self) -> usize {
        self.bigrams.len()
    }

    pub fn chars(&self) -> &[String] {
        &self.chars
    }

    pub fn bigrams(&self) -> &[(String, String)] {
        &self.bigrams
    }

    pub fn char_id(&self, c: &str) -> Option<usize> {
        self.char_to_id.get(c).copied()
    }

    /// Id of a unit, falling back to UNK.
    pub fn char_id_or_unk(&self, c: &str) -> usize {
        self.char_id(c).unwrap_or(Self::UNK_ID)
    }

    pub fn bigram_id(&self, a: &str, b: &str) -> Option<usize> {
        self.bigram_to_id.get(&(a.to_string(), b.to_string())).copied()
    }

    /// Character ids of a unit sequence.
    pub fn encode_chars(&self, units: &[String]) -> Vec<usize> {
        units.iter().map(|u| self.char_id_or_unk(u)).collect()
    }

    /// Bigram id for every position: `(c[i], c[i+1])`, PAD at the last
    /// position, UNK for pairs below the cutoff.
    pub fn encode_bigrams(&self, units: &[String]) -> Vec<usize> {
        (0..units.len())
            .map(|i| match units.get(i + 1) {
                None => Self::BIGRAM_PAD_ID,
                Some(next) => self.bigram_id(&units[i], next).unwrap_or(Self::BIGRAM_UNK_ID),
            })
            .collect()
    }

    /// SHA-256 over the ordered entries, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for c in &self.chars {
            h.update(c.as_bytes());
            h.update([0u8]);
        }
        h.update([1u8]);
        for (a, b) in &self.bigrams {
            h.update(a.as_bytes());
            h.update([0u8]);
            h.update(b.as_bytes());
            h.update([0u8]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Plain-text form: one `char <unit>` or `bigram <a> <b>` line per
    /// non-reserved entry, in id order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.chars[Self::RESERVED_CHARS..] {
            s.push_str("char ");
            s.push_str(c);
            s.push('\n');
        }
        for (a, b) in &self.bigrams[Self::RESERVED_BIGRAMS..] {
            s.push_str(&format!("bigram {a} {b}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> crate::Result<Self> {
        let mut chars = Vec::new();
        let mut bigrams = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split(' ').collect();
            match fields.as_slice() {
                [] | [""] => {}
                ["char", c] => chars.push(c.to_string()),
                ["bigram", a, b] => bigrams.push((a.to_string(), b.to_string())),
                _ => {
                    return Err(crate::Error::Format {
                        line: i + 1,
                        msg: format!("bad vocab entry `{line}`"),
                    })
                }
            }
        }
        Ok(Vocab::from_entries(chars, bigrams))
    }
}

/// Every unit in the corpus gets an id; a bigram is kept iff it occurs at
/// least `bigram_min_count` times. Entries are ordered lexicographically so
/// ids are stable across runs.
pub fn build_vocab(corpus: &[TaggedSentence], bigram_min_count: usize) -> Vocab {
    let mut chars = BTreeSet::new();
    let mut counts: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for sent in corpus {
        chars.extend(sent.chars.iter().cloned());
        for w in sent.chars.windows(2) {
            *counts.entry((w[0].as_str(), w[1].as_str())).or_default() += 1;
        }
    }
    let bigrams = counts
        .into_iter()
        .filter(|&(_, n)| n >= bigram_min_count)
        .map(|((a, b), _)| (a.to_string(), b.to_string()));
    Vocab::from_entries(chars, bigrams)
}
