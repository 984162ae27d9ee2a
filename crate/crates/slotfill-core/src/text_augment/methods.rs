//! The five text-level augmentation methods. Each draws its randomness from
//! a caller-supplied generator and returns the augmented pair with its
//! alignment map.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::corpus::{tag_shape, Sentence, UnigramSampler, OUTSIDE};
use crate::text_augment::{AlignedSentence, Lexicon};

/// One character edit. Positions index Unicode scalars, 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum CharEdit {
    Add { pos: usize, c: char },
    Delete { pos: usize },
    Replace { pos: usize, c: char },
}

/// Applies a single edit to a token. `Delete` requires length >= 2; the
/// sampler below never produces a deleting edit on a one-char token.
pub(crate) fn apply_char_edit(token: &str, edit: CharEdit) -> String {
    let mut chars: Vec<char> = token.chars().collect();
    match edit {
        CharEdit::Add { pos, c } => chars.insert(pos, c),
        CharEdit::Delete { pos } => {
            debug_assert!(chars.len() >= 2, "delete would empty the token");
            chars.remove(pos);
        }
        CharEdit::Replace { pos, c } => chars[pos] = c,
    }
    chars.into_iter().collect()
}

/// Samples one edit for a token: operation uniform over add/delete/replace,
/// position uniform, added or replacing characters uniform over a-z. A
/// delete drawn for a one-char token is remapped to replace so tokens stay
/// non-empty.
pub(crate) fn sample_char_edit<R: Rng>(token: &str, rng: &mut R) -> CharEdit {
    let len = token.chars().count();
    let op = rng.random_range(0..3u8);
    match op {
        0 => CharEdit::Add { pos: rng.random_range(0..=len), c: random_lower(rng) },
        1 if len >= 2 => CharEdit::Delete { pos: rng.random_range(0..len) },
        _ => CharEdit::Replace { pos: rng.random_range(0..len), c: random_lower(rng) },
    }
}

fn random_lower<R: Rng>(rng: &mut R) -> char {
    rng.random_range(b'a'..=b'z') as char
}

/// Character-level noise: each token is independently selected with
/// probability p and receives one random character edit. Token count and
/// tags are unchanged.
pub fn char_aug<R: Rng>(s: &Sentence, p: f64, rng: &mut R) -> AlignedSentence {
    let mut out = AlignedSentence::identity(s);
    for tok in &mut out.augmented.tokens {
        if rng.random_bool(p) {
            let edit = sample_char_edit(tok, rng);
            *tok = apply_char_edit(tok, edit);
        }
    }
    out
}

/// Word deletion: each token is dropped independently with probability p,
/// except that the last token survives when every token was selected. A
/// surviving I-tag whose chunk head was deleted is promoted to B so the
/// output stays canonical BIO.
pub fn delete_word<R: Rng>(s: &Sentence, p: f64, rng: &mut R) -> AlignedSentence {
    let keep: Vec<bool> = (0..s.len()).map(|_| !rng.random_bool(p)).collect();
    delete_by_mask(s, keep)
}

/// Deletion driver shared with the evaluation-noise Simplify process: drops
/// the tokens whose mask entry is false, keeping the last token when the
/// mask would empty the sentence, with the same I-to-B promotion rule as
/// [`delete_word`].
pub(crate) fn delete_by_mask(s: &Sentence, mut keep: Vec<bool>) -> AlignedSentence {
    if keep.iter().all(|&k| !k) {
        *keep.last_mut().expect("sentence is non-empty") = true;
    }
    let mut tokens = Vec::new();
    let mut tags: Vec<String> = Vec::new();
    let mut alignment = Vec::new();
    let mut prev_kept: Option<usize> = None;
    for (i, &kept) in keep.iter().enumerate() {
        if !kept {
            continue;
        }
        let mut tag = s.tags[i].clone();
        if let Some((b'I', ty)) = tag_shape(&tag) {
            // The chunk head survives only if the immediately preceding
            // source token was kept and continues the same type.
            let headed = i > 0
                && prev_kept == Some(i - 1)
                && matches!(tag_shape(&s.tags[i - 1]), Some((b'B', t)) | Some((b'I', t)) if t == ty);
            if !headed {
                tag = format!("B-{ty}");
            }
        }
        tokens.push(s.tokens[i].clone());
        tags.push(tag);
        alignment.push(Some(i));
        prev_kept = Some(i);
    }
    AlignedSentence { augmented: Sentence { tokens, tags }, alignment }
}

/// Word insertion: a gap qualifies when the adjacent existing tokens on both
/// sides (where present) are tagged O; each qualifying gap independently
/// receives, with probability p, one unigram-sampled token tagged O.
pub fn insert_word<R: Rng>(
    s: &Sentence,
    p: f64,
    rng: &mut R,
    sampler: &UnigramSampler,
) -> AlignedSentence {
    let outside = |i: usize| s.tags[i] == OUTSIDE;
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    let mut alignment = Vec::new();
    for gap in 0..=s.len() {
        let ok = (gap == 0 || outside(gap - 1)) && (gap == s.len() || outside(gap));
        if ok && rng.random_bool(p) {
            tokens.push(sampler.sample(rng).to_string());
            tags.push(OUTSIDE.to_string());
            alignment.push(None);
        }
        if gap < s.len() {
            tokens.push(s.tokens[gap].clone());
            tags.push(s.tags[gap].clone());
            alignment.push(Some(gap));
        }
    }
    AlignedSentence { augmented: Sentence { tokens, tags }, alignment }
}

/// Homophone replacement: each token holding a lexicon entry is replaced,
/// with probability p, by a uniformly chosen alternative. Length-preserving.
pub fn speech_aug<R: Rng>(s: &Sentence, p: f64, rng: &mut R, lex: &Lexicon) -> AlignedSentence {
    substitute(s, p, rng, lex)
}

/// Synonym substitution: identical mechanics to [`speech_aug`], driven by
/// the synonym lexicon.
pub fn sub_word<R: Rng>(s: &Sentence, p: f64, rng: &mut R, lex: &Lexicon) -> AlignedSentence {
    substitute(s, p, rng, lex)
}

fn substitute<R: Rng>(s: &Sentence, p: f64, rng: &mut R, lex: &Lexicon) -> AlignedSentence {
    let mut out = AlignedSentence::identity(s);
    for tok in &mut out.augmented.tokens {
        if let Some(alts) = lex.get(tok) {
            if rng.random_bool(p) {
                *tok = alts.choose(rng).expect("lexicon lists are non-empty").clone();
            }
        }
    }
    out
}
