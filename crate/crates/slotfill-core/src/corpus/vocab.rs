//! Vocabulary construction and the unigram sampler used by word insertion.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::error::{Error, Result};

/// Word and character index maps with reserved PAD=0 and UNK=1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    word_index: BTreeMap<String, usize>,
    char_index: BTreeMap<char, usize>,
    min_count: usize,
}

pub const PAD: usize = 0;
pub const UNK: usize = 1;

impl Vocabulary {
    /// Index of a word, falling back to UNK.
    pub fn word_id(&self, word: &str) -> usize {
        self.word_index.get(word).copied().unwrap_or(UNK)
    }

    /// Index of a character, falling back to UNK.
    pub fn char_id(&self, c: char) -> usize {
        self.char_index.get(&c).copied().unwrap_or(UNK)
    }

    pub fn contains_word(&self, word: &str) -> bool {
        self.word_index.contains_key(word)
    }

    /// Index of an in-vocabulary word; None rather than UNK for the rest.
    pub fn known_word_id(&self, word: &str) -> Option<usize> {
        self.word_index.get(word).copied()
    }

    /// Table size including the two reserved rows.
    pub fn n_words(&self) -> usize {
        self.word_index.len() + 2
    }

    pub fn n_chars(&self) -> usize {
        self.char_index.len() + 2
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    /// Indexed words in increasing index order.
    pub fn words(&self) -> Vec<&str> {
        let mut by_index: Vec<(&str, usize)> =
            self.word_index.iter().map(|(w, &i)| (w.as_str(), i)).collect();
        by_index.sort_by_key(|&(_, i)| i);
        by_index.into_iter().map(|(w, _)| w).collect()
    }
}

/// Counts tokens and assigns dense indices: frequency descending, ties by
/// lexicographic order, starting at 2. Words under `min_count` fall to UNK;
/// characters are indexed without a threshold so the char channel can cover
/// rare surface forms.
pub fn build_vocab(datasets: &[&Dataset], min_count: usize) -> Result<Vocabulary> {
    if min_count < 1 {
        return Err(Error::Config("min_count must be >= 1".into()));
    }
    let mut word_counts: HashMap<&str, usize> = HashMap::new();
    let mut char_counts: HashMap<char, usize> = HashMap::new();
    for ds in datasets {
        for s in &ds.sentences {
            for tok in &s.tokens {
                *word_counts.entry(tok).or_insert(0) += 1;
                for c in tok.chars() {
                    *char_counts.entry(c).or_insert(0) += 1;
                }
            }
        }
    }
    if word_counts.is_empty() {
        return Err(Error::Data("cannot build a vocabulary from an empty corpus".into()));
    }

    let word_index = rank(word_counts.into_iter().filter(|&(_, n)| n >= min_count))
        .into_iter()
        .map(|(w, i)| (w.to_string(), i))
        .collect();
    let char_index = rank(char_counts.into_iter()).into_iter().collect();
    Ok(Vocabulary { word_index, char_index, min_count })
}

/// Stable ranking shared by both index maps: count desc, key asc, ids from 2.
fn rank<T: Ord>(counts: impl Iterator<Item = (T, usize)>) -> Vec<(T, usize)> {
    let mut items: Vec<(T, usize)> = counts.collect();
    items.sort_by(|(ka, na), (kb, nb)| nb.cmp(na).then_with(|| ka.cmp(kb)));
    items.into_iter().enumerate().map(|(i, (k, _))| (k, i + 2)).collect()
}

/// Draws tokens from the empirical unigram distribution of a corpus.
#[derive(Clone, Debug)]
pub struct UnigramSampler {
    words: Vec<String>,
    cumulative: Vec<u64>,
    total: u64,
}

impl UnigramSampler {
    /// Builds the sampler from token counts over the given datasets.
    pub fn from_datasets(datasets: &[&Dataset]) -> Result<Self> {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for ds in datasets {
            for s in &ds.sentences {
                for tok in &s.tokens {
                    *counts.entry(tok).or_insert(0) += 1;
                }
            }
        }
        if counts.is_empty() {
            return Err(Error::Data("cannot build a unigram sampler from an empty corpus".into()));
        }
        let mut items: Vec<(&str, usize)> = counts.into_iter().collect();
        items.sort_by(|(ka, na), (kb, nb)| nb.cmp(na).then_with(|| ka.cmp(kb)));
        let mut words = Vec::with_capacity(items.len());
        let mut cumulative = Vec::with_capacity(items.len());
        let mut total = 0u64;
        for (w, n) in items {
            total += n as u64;
            words.push(w.to_string());
            cumulative.push(total);
        }
        Ok(UnigramSampler { words, cumulative, total })
    }

    /// Samples one token proportionally to its corpus frequency.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> &str {
        let x = rng.random_range(0..self.total);
        let i = self.cumulative.partition_point(|&c| c <= x);
        &self.words[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentence, Split};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn ds(lines: &[&str]) -> Dataset {
        let sentences = lines
            .iter()
            .map(|l| {
                let tokens: Vec<String> = l.split(' ').map(String::from).collect();
                let tags = vec!["O".to_string(); tokens.len()];
                Sentence::new(tokens, tags).unwrap()
            })
            .collect();
        Dataset::new("t", Split::Train, sentences)
    }

    #[test]
    fn threshold_sends_rare_words_to_unk() {
        let d = ds(&["a a b"]);
        let v = build_vocab(&[&d], 2).unwrap();
        assert!(v.contains_word("a"));
        assert!(!v.contains_word("b"));
        assert_eq!(v.word_id("b"), UNK);
    }

    #[test]
    fn counts_distinct_words_plus_reserved() {
        let d = ds(&["x y z"]);
        let v = build_vocab(&[&d], 1).unwrap();
        assert_eq!(v.n_words(), 3 + 2);
    }

    #[test]
    fn deterministic_across_calls() {
        let d = ds(&["the cheap place", "the far place", "a cheap one"]);
        let a = build_vocab(&[&d], 1).unwrap();
        let b = build_vocab(&[&d], 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn frequency_then_lexicographic_order() {
        let d = ds(&["b b a a c"]);
        let v = build_vocab(&[&d], 1).unwrap();
        // "a" and "b" both occur twice; the tie breaks lexicographically.
        assert_eq!(v.word_id("a"), 2);
        assert_eq!(v.word_id("b"), 3);
        assert_eq!(v.word_id("c"), 4);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let d = Dataset::new("e", Split::Train, vec![]);
        assert!(build_vocab(&[&d], 1).is_err());
    }

    #[test]
    fn chars_are_indexed_unthresholded() {
        let d = ds(&["ab ab cd"]);
        let v = build_vocab(&[&d], 3).unwrap();
        assert_ne!(v.char_id('c'), UNK);
        assert_eq!(v.word_id("ab"), UNK);
    }

    #[test]
    fn sampler_tracks_empirical_frequencies() {
        let d = ds(&["a a a b"]);
        let s = UnigramSampler::from_datasets(&[&d]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let n = 40_000;
        let hits = (0..n).filter(|_| s.sample(&mut rng) == "a").count();
        let frac = hits as f64 / n as f64;
        assert!((frac - 0.75).abs() < 0.01, "got {frac}");
    }
}
