//! Text-level augmentation: five methods that rewrite a clean training pair
//! (X, Y) into an augmented pair with a token alignment map.

mod lexicon;
mod methods;

pub use lexicon::{build_homophone_lexicon, soundex, Lexicon};
pub use methods::{char_aug, delete_word, insert_word, speech_aug, sub_word};
pub(crate) use methods::{apply_char_edit, delete_by_mask, sample_char_edit};

use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Sentence, UnigramSampler};
use crate::error::{Error, Result};

/// The five text-level methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextAugmentMethod {
    CharAug,
    DeleteWord,
    InsertWord,
    SpeechAug,
    SubWord,
}

impl TextAugmentMethod {
    /// Default transform probability: 0.15 at character level, 0.3 for the
    /// word and sentence level methods.
    pub fn default_p(self) -> f64 {
        match self {
            TextAugmentMethod::CharAug => 0.15,
            _ => 0.3,
        }
    }

    /// Whether the method preserves token count and tag sequence. The
    /// consistency losses over logits and hidden states require this.
    pub fn preserves_length(self) -> bool {
        matches!(self, TextAugmentMethod::CharAug | TextAugmentMethod::SpeechAug)
    }

    pub fn name(self) -> &'static str {
        match self {
            TextAugmentMethod::CharAug => "char_aug",
            TextAugmentMethod::DeleteWord => "delete_word",
            TextAugmentMethod::InsertWord => "insert_word",
            TextAugmentMethod::SpeechAug => "speech_aug",
            TextAugmentMethod::SubWord => "sub_word",
        }
    }
}

/// Configuration of one text-level augmentation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextAugmentConfig {
    pub method: TextAugmentMethod,
    /// Per-token (or per-gap) Bernoulli transform probability.
    pub p: f64,
    pub seed: u64,
    /// Lexicon file for SpeechAug; merged over the built-in table.
    #[serde(default)]
    pub homophone_lexicon: Option<PathBuf>,
    /// Lexicon file for SubWord; merged over the built-in table.
    #[serde(default)]
    pub synonym_lexicon: Option<PathBuf>,
}

impl TextAugmentConfig {
    pub fn new(method: TextAugmentMethod, seed: u64) -> Self {
        TextAugmentConfig {
            method,
            p: method.default_p(),
            seed,
            homophone_lexicon: None,
            synonym_lexicon: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Config(format!("transform probability {} not in [0, 1]", self.p)));
        }
        Ok(())
    }
}

/// Runtime resources consumed by some methods: lexicons for the replacement
/// methods, a unigram sampler for insertion.
#[derive(Clone, Copy, Default)]
pub struct AugmentResources<'a> {
    pub homophones: Option<&'a Lexicon>,
    pub synonyms: Option<&'a Lexicon>,
    pub sampler: Option<&'a UnigramSampler>,
}

/// An augmented sentence plus, per augmented token, the index of its
/// originating clean token (`None` for inserted tokens). Originating indices
/// are strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignedSentence {
    pub augmented: Sentence,
    pub alignment: Vec<Option<usize>>,
}

impl AlignedSentence {
    /// The untransformed sentence with an identity alignment.
    pub fn identity(s: &Sentence) -> Self {
        AlignedSentence {
            augmented: s.clone(),
            alignment: (0..s.len()).map(Some).collect(),
        }
    }

    /// Checks the alignment invariants against the clean source length.
    pub fn check(&self, clean_len: usize) -> Result<()> {
        if self.alignment.len() != self.augmented.len() {
            return Err(Error::Data("alignment length mismatch".into()));
        }
        let mut last: Option<usize> = None;
        for &origin in self.alignment.iter().flatten() {
            if origin >= clean_len {
                return Err(Error::Data("alignment index out of range".into()));
            }
            if last.is_some_and(|prev| origin <= prev) {
                return Err(Error::Data("alignment indices not strictly increasing".into()));
            }
            last = Some(origin);
        }
        Ok(())
    }

}

/// Composes alignments of two chained transforms. `first` maps intermediate
/// tokens to clean indices, `second` maps final tokens to intermediate
/// indices; the result maps final tokens to clean indices. A final token is
/// `None` when either stage inserted it.
pub fn compose_alignments(
    first: &[Option<usize>],
    second: &[Option<usize>],
) -> Vec<Option<usize>> {
    second
        .iter()
        .map(|o| o.and_then(|mid| first.get(mid).copied().flatten()))
        .collect()
}

/// Applies the configured method. Lexicon-backed methods fail fast when
/// their resource is missing.
pub fn apply_text_augment<R: Rng>(
    cfg: &TextAugmentConfig,
    s: &Sentence,
    rng: &mut R,
    res: &AugmentResources,
) -> Result<AlignedSentence> {
    cfg.validate()?;
    match cfg.method {
        TextAugmentMethod::CharAug => Ok(char_aug(s, cfg.p, rng)),
        TextAugmentMethod::DeleteWord => Ok(delete_word(s, cfg.p, rng)),
        TextAugmentMethod::InsertWord => {
            let sampler = res.sampler.ok_or_else(|| {
                Error::Config("insert_word needs a unigram sampler built from the training corpus".into())
            })?;
            Ok(insert_word(s, cfg.p, rng, sampler))
        }
        TextAugmentMethod::SpeechAug => {
            let lex = res.homophones.ok_or_else(|| {
                Error::Config("speech_aug needs a homophone lexicon".into())
            })?;
            Ok(speech_aug(s, cfg.p, rng, lex))
        }
        TextAugmentMethod::SubWord => {
            let lex = res
                .synonyms
                .ok_or_else(|| Error::Config("sub_word needs a synonym lexicon".into()))?;
            Ok(sub_word(s, cfg.p, rng, lex))
        }
    }
}
