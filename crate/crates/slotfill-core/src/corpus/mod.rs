//! BIO-tagged data model, CoNLL ingestion and serialization, vocabulary
//! construction, and a deterministic synthetic corpus generator.

mod conll;
mod spans;
mod synth;
mod vocab;

pub use conll::{parse_conll, write_conll};
pub use spans::{extract_spans, spans_to_bio};
pub use synth::{generate_synthetic_corpus, generate_with_grammar, Grammar};
pub use vocab::{build_vocab, UnigramSampler, Vocabulary, PAD, UNK};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outside tag; always index 0 in a [`LabelScheme`].
pub const OUTSIDE: &str = "O";

/// A tokenized utterance with one BIO tag per token.
///
/// Invariant: `tokens.len() == tags.len() >= 1`, every token non-empty,
/// every tag "O" or "B-<type>"/"I-<type>".
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
}

impl Sentence {
    /// Builds a sentence, validating the structural invariants. Tag types are
    /// not checked against a scheme here; see [`LabelScheme::validate`].
    pub fn new(tokens: Vec<String>, tags: Vec<String>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Data("sentence must have at least one token".into()));
        }
        if tokens.len() != tags.len() {
            return Err(Error::Data(format!(
                "token/tag length mismatch: {} vs {}",
                tokens.len(),
                tags.len()
            )));
        }
        if let Some(t) = tokens.iter().find(|t| t.is_empty()) {
            let _ = t;
            return Err(Error::Data("empty token".into()));
        }
        for tag in &tags {
            tag_shape(tag).ok_or_else(|| Error::Data(format!("malformed tag {tag:?}")))?;
        }
        Ok(Sentence { tokens, tags })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Splits a tag into its BIO role. Returns `None` for malformed tags.
/// "O" maps to `(b'O', "")`; "B-food" to `(b'B', "food")`.
pub(crate) fn tag_shape(tag: &str) -> Option<(u8, &str)> {
    if tag == OUTSIDE {
        return Some((b'O', ""));
    }
    let (role, ty) = tag.split_at_checked(2)?;
    if ty.is_empty() {
        return None;
    }
    match role {
        "B-" => Some((b'B', ty)),
        "I-" => Some((b'I', ty)),
        _ => None,
    }
}

/// The closed tag set of a task: {O} plus B-/I- pairs for each slot type.
///
/// "O" sits at index 0 so all-zero emission scores decode to the outside
/// tag; remaining tags follow in sorted slot-type order, B before I.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct LabelScheme {
    slot_types: Vec<String>,
    tags: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelScheme {
    /// Builds the scheme from a set of slot type names (deduplicated, sorted).
    pub fn from_slot_types<I, S>(types: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut slot_types: Vec<String> = types.into_iter().map(Into::into).collect();
        slot_types.sort();
        slot_types.dedup();
        let mut tags = vec![OUTSIDE.to_string()];
        for ty in &slot_types {
            tags.push(format!("B-{ty}"));
            tags.push(format!("I-{ty}"));
        }
        let index = tags.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        LabelScheme { slot_types, tags, index }
    }

    /// Collects slot types from every tag occurring in the given datasets.
    pub fn from_datasets(datasets: &[&Dataset]) -> Result<Self> {
        let mut types = Vec::new();
        for ds in datasets {
            for s in &ds.sentences {
                for tag in &s.tags {
                    let (role, ty) =
                        tag_shape(tag).ok_or_else(|| Error::Data(format!("malformed tag {tag:?}")))?;
                    if role != b'O' {
                        types.push(ty.to_string());
                    }
                }
            }
        }
        Ok(Self::from_slot_types(types))
    }

    /// Number of tags K = 2 * |slot_types| + 1.
    pub fn k(&self) -> usize {
        self.tags.len()
    }

    pub fn slot_types(&self) -> &[String] {
        &self.slot_types
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn tag_to_index(&self, tag: &str) -> Option<usize> {
        self.index.get(tag).copied()
    }

    pub fn index_to_tag(&self, index: usize) -> &str {
        &self.tags[index]
    }

    /// Encodes a sentence's tags as indices.
    pub fn encode_tags(&self, s: &Sentence) -> Result<Vec<usize>> {
        s.tags
            .iter()
            .map(|t| {
                self.tag_to_index(t)
                    .ok_or_else(|| Error::Data(format!("tag {t:?} not in label scheme")))
            })
            .collect()
    }

    /// Checks that every tag of every sentence belongs to this scheme.
    pub fn validate(&self, ds: &Dataset) -> Result<()> {
        for (i, s) in ds.sentences.iter().enumerate() {
            for tag in &s.tags {
                if self.tag_to_index(tag).is_none() {
                    return Err(Error::Data(format!(
                        "sentence {i}: tag {tag:?} not in label scheme"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl From<Vec<String>> for LabelScheme {
    fn from(slot_types: Vec<String>) -> Self {
        Self::from_slot_types(slot_types)
    }
}

impl From<LabelScheme> for Vec<String> {
    fn from(s: LabelScheme) -> Self {
        s.slot_types
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

/// A named split of sentences, all valid under one scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub split: Split,
    pub sentences: Vec<Sentence>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, split: Split, sentences: Vec<Sentence>) -> Self {
        Dataset { name: name.into(), split, sentences }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// A maximal chunk: token interval [start, end) of one slot type.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub slot_type: String,
}

impl Span {
    pub fn new(start: usize, end: usize, slot_type: impl Into<String>) -> Self {
        Span { start, end, slot_type: slot_type.into() }
    }
}
