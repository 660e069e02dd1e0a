use std::fmt;

use super::{split_units, SegmentedSentence};
use crate::error::{Error, Result};

/// Four-way character tag: Begin, Middle, End of a multi-character word,
/// or Single-character word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    B = 0,
    M = 1,
    E = 2,
    S = 3,
}

impl Tag {
    pub const COUNT: usize = 4;
    pub const ALL: [Tag; 4] = [Tag::B, Tag::M, Tag::E, Tag::S];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Tag> {
        Tag::ALL.get(i).copied()
    }

    /// Whether a sentence may start with this tag.
    pub fn can_start(self) -> bool {
        matches!(self, Tag::B | Tag::S)
    }

    /// Whether a sentence may end with this tag.
    pub fn can_end(self) -> bool {
        matches!(self, Tag::E | Tag::S)
    }

    /// Whether `next` may directly follow `self`.
    pub fn can_precede(self, next: Tag) -> bool {
        match self {
            Tag::B | Tag::M => matches!(next, Tag::M | Tag::E),
            Tag::E | Tag::S => matches!(next, Tag::B | Tag::S),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Tag::B => "B",
            Tag::M => "M",
            Tag::E => "E",
            Tag::S => "S",
        };
        f.write_str(c)
    }
}

/// Units aligned with one tag each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedSentence {
    pub chars: Vec<String>,
    pub tags: Vec<Tag>,
}

impl TaggedSentence {
    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    /// True when the tag sequence is a well-formed BMES labelling.
    pub fn is_valid(&self) -> bool {
        self.chars.len() == self.tags.len() && tags_valid(&self.tags)
    }
}

pub fn tags_valid(tags: &[Tag]) -> bool {
    match (tags.first(), tags.last()) {
        (None, _) => true,
        (Some(first), Some(last)) => {
            first.can_start()
                && last.can_end()
                && tags.windows(2).all(|w| w[0].can_precede(w[1]))
        }
        _ => unreachable!(),
    }
}

pub fn to_bmes(s: &SegmentedSentence) -> Result<TaggedSentence> {
    let mut chars = Vec::new();
    let mut tags = Vec::new();
    for word in &s.words {
        let units = split_units(word);
        match units.len() {
            0 => return Err(Error::Structure("empty word".into())),
            1 => tags.push(Tag::S),
            k => {
                tags.push(Tag::B);
                tags.extend(std::iter::repeat_n(Tag::M, k - 2));
                tags.push(Tag::E);
            }
        }
        chars.extend(units);
    }
    Ok(TaggedSentence { chars, tags })
}

/// Word boundaries as `(start, end)` unit spans. Invalid tag sequences are
/// repaired left to right: `S` and `B` close any open span, `M`/`E` without
/// an open span open one, and a span left open at the end becomes a word.
pub fn tag_spans(tags: &[Tag]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &tag) in tags.iter().enumerate() {
        match tag {
            Tag::S => {
                if let Some(start) = open.take() {
                    spans.push((start, i));
                }
                spans.push((i, i + 1));
            }
            Tag::B => {
                if let Some(start) = open.take() {
                    spans.push((start, i));
                }
                open = Some(i);
            }
            Tag::M => {
                open.get_or_insert(i);
            }
            Tag::E => {
                let start = open.take().unwrap_or(i);
                spans.push((start, i + 1));
            }
        }
    }
    if let Some(start) = open {
        spans.push((start, tags.len()));
    }
    spans
}

pub fn from_bmes(t: &TaggedSentence) -> Result<SegmentedSentence> {
    if t.chars.len() != t.tags.len() {
        return Err(Error::Structure(format!(
            "{} characters but {} tags",
            t.chars.len(),
            t.tags.len()
        )));
    }
    let words = tag_spans(&t.tags)
        .into_iter()
        .map(|(a, b)| t.chars[a..b].concat())
        .collect();
    Ok(SegmentedSentence { words })
}
