//! Rule-based evaluation noise. A noise process maps every clean test pair
//! (X, Y) to a noisy pair with a token alignment, producing a noisy test set
//! of exactly the same size; robustness metrics then compare model scores on
//! the two sets.
//!
//! All processes are seeded per sentence, so a spec identifies one
//! reproducible noisy benchmark regardless of evaluation order.

mod metrics;

pub use metrics::{
    damage_rates, delta_f1, lcs_alignment, rho, rho_literal, span_f1, MetricsReport,
};

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Sentence, OUTSIDE};
use crate::error::{Error, Result};
use crate::text_augment::{
    apply_char_edit, char_aug, delete_by_mask, sample_char_edit, speech_aug, sub_word,
    AlignedSentence, Lexicon,
};

/// The noise processes. Mixed applies its components in listed order,
/// composing alignments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// One character edit per selected slot-entity token.
    Typos,
    /// One QWERTY-adjacent character replacement per selected token.
    Keyboard,
    /// One character edit per selected token, any tag.
    SpellingError,
    /// Homophone substitution over the whole sentence.
    Homophone,
    /// Synonym substitution over the whole sentence.
    SynonymSwap,
    /// Appends an irrelevant clause, tagged O throughout; ignores intensity.
    AppendIrr,
    /// Concatenates another sentence of the split, tags kept; ignores intensity.
    ConcatSent,
    /// Deletes O-tagged tokens.
    Simplify,
    Mixed(Vec<NoiseKind>),
}

impl NoiseKind {
    pub fn name(&self) -> String {
        match self {
            NoiseKind::Typos => "typos".into(),
            NoiseKind::Keyboard => "keyboard".into(),
            NoiseKind::SpellingError => "spelling_error".into(),
            NoiseKind::Homophone => "homophone".into(),
            NoiseKind::SynonymSwap => "synonym_swap".into(),
            NoiseKind::AppendIrr => "append_irr".into(),
            NoiseKind::ConcatSent => "concat_sent".into(),
            NoiseKind::Simplify => "simplify".into(),
            NoiseKind::Mixed(kinds) => {
                let parts: Vec<String> = kinds.iter().map(|k| k.name()).collect();
                format!("mixed:{}", parts.join("+"))
            }
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<NoiseKind> {
        if let Some(rest) = s.strip_prefix("mixed:") {
            let kinds: Vec<NoiseKind> =
                rest.split('+').map(NoiseKind::from_str).collect::<Result<_>>()?;
            return Ok(NoiseKind::Mixed(kinds));
        }
        match s {
            "typos" => Ok(NoiseKind::Typos),
            "keyboard" => Ok(NoiseKind::Keyboard),
            "spelling_error" => Ok(NoiseKind::SpellingError),
            "homophone" => Ok(NoiseKind::Homophone),
            "synonym_swap" => Ok(NoiseKind::SynonymSwap),
            "append_irr" => Ok(NoiseKind::AppendIrr),
            "concat_sent" => Ok(NoiseKind::ConcatSent),
            "simplify" => Ok(NoiseKind::Simplify),
            other => Err(Error::Config(format!("unknown noise kind {other:?}"))),
        }
    }
}

/// One reproducible noise process: kind, per-token intensity, seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    #[serde(default = "default_intensity")]
    pub intensity: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_intensity() -> f64 {
    0.3
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, intensity: f64, seed: u64) -> NoiseSpec {
        NoiseSpec { kind, intensity, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.intensity) {
            return Err(Error::Config(format!(
                "noise intensity must lie in [0, 1], got {}",
                self.intensity
            )));
        }
        if let NoiseKind::Mixed(kinds) = &self.kind {
            if kinds.is_empty() {
                return Err(Error::Config("mixed noise needs at least one component".into()));
            }
            if kinds.iter().any(|k| matches!(k, NoiseKind::Mixed(_))) {
                return Err(Error::Config("mixed noise cannot nest".into()));
            }
        }
        Ok(())
    }
}

/// One noisy evaluation sentence, tied back to its clean original.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisePair {
    pub original_index: usize,
    pub noisy: Sentence,
    /// Per noisy token, the clean token index it descends from.
    pub alignment: Vec<Option<usize>>,
}

/// Lexicons the lexical noise kinds draw from.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoiseResources<'a> {
    pub homophones: Option<&'a Lexicon>,
    pub synonyms: Option<&'a Lexicon>,
}

/// Seed derivation for sub-streams: component j of a mixed process, or
/// sentence j of a dataset. SplitMix64 finalizer keyed by position.
pub fn component_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Irrelevant-clause pool for AppendIrr. The clauses are all context (O) by
/// construction but deliberately reuse surface words that also occur inside
/// slot values, so appending them actually stresses a tagger.
const IRRELEVANT_CLAUSES: &[&str] = &[
    "thanks a lot",
    "that is all for now",
    "no rush at all",
    "my friend said the north route was fast",
    "we already ate italian yesterday",
    "money is not cheap these days",
    "my four year old loves trains",
    "by the way the weather is nice",
    "i read about it in a two page flyer",
    "someone told me the west wind is cold",
];

/// Applies a noise process to a whole dataset: one pair per clean sentence,
/// in order. Deterministic in (dataset, spec).
pub fn apply_noise(ds: &Dataset, spec: &NoiseSpec, res: &NoiseResources) -> Result<Vec<NoisePair>> {
    spec.validate()?;
    if let NoiseKind::Mixed(kinds) = &spec.kind {
        return apply_mixed(ds, kinds, spec, res);
    }
    let mut pairs = Vec::with_capacity(ds.sentences.len());
    for (i, s) in ds.sentences.iter().enumerate() {
        let mut rng = ChaCha20Rng::seed_from_u64(component_seed(spec.seed, i));
        let aligned = noisify_sentence(&spec.kind, spec.intensity, s, ds, i, res, &mut rng)?;
        aligned.check(s.len())?;
        pairs.push(NoisePair {
            original_index: i,
            noisy: aligned.augmented,
            alignment: aligned.alignment,
        });
    }
    Ok(pairs)
}

/// Sequential composition: component j runs with seed component_seed(seed, j)
/// over the output of component j-1; alignments compose back to the clean
/// token indices.
fn apply_mixed(
    ds: &Dataset,
    kinds: &[NoiseKind],
    spec: &NoiseSpec,
    res: &NoiseResources,
) -> Result<Vec<NoisePair>> {
    let mut current = ds.clone();
    let mut total: Vec<Vec<Option<usize>>> =
        ds.sentences.iter().map(|s| (0..s.len()).map(Some).collect()).collect();
    for (j, kind) in kinds.iter().enumerate() {
        let sub = NoiseSpec::new(kind.clone(), spec.intensity, component_seed(spec.seed, j));
        let stage = apply_noise(&current, &sub, res)?;
        let mut sentences = Vec::with_capacity(stage.len());
        for (pair, tot) in stage.into_iter().zip(total.iter_mut()) {
            *tot = crate::text_augment::compose_alignments(tot, &pair.alignment);
            sentences.push(pair.noisy);
        }
        current.sentences = sentences;
    }
    Ok(current
        .sentences
        .into_iter()
        .zip(total)
        .enumerate()
        .map(|(i, (noisy, alignment))| NoisePair { original_index: i, noisy, alignment })
        .collect())
}

fn noisify_sentence<R: Rng>(
    kind: &NoiseKind,
    intensity: f64,
    s: &Sentence,
    ds: &Dataset,
    index: usize,
    res: &NoiseResources,
    rng: &mut R,
) -> Result<AlignedSentence> {
    match kind {
        NoiseKind::Typos => Ok(entity_typos(s, intensity, rng)),
        NoiseKind::Keyboard => Ok(keyboard(s, intensity, rng)),
        NoiseKind::SpellingError => Ok(char_aug(s, intensity, rng)),
        NoiseKind::Homophone => {
            let lex = res.homophones.ok_or_else(|| {
                Error::Config("homophone noise needs a homophone lexicon".into())
            })?;
            Ok(speech_aug(s, intensity, rng, lex))
        }
        NoiseKind::SynonymSwap => {
            let lex = res
                .synonyms
                .ok_or_else(|| Error::Config("synonym_swap noise needs a synonym lexicon".into()))?;
            Ok(sub_word(s, intensity, rng, lex))
        }
        NoiseKind::AppendIrr => Ok(append_irr(s, rng)),
        NoiseKind::ConcatSent => Ok(concat_sent(s, ds, index, rng)),
        NoiseKind::Simplify => Ok(simplify(s, intensity, rng)),
        NoiseKind::Mixed(_) => unreachable!("mixed handled at the dataset level"),
    }
}

/// Typos restricted to slot-entity tokens: each non-O token receives, with
/// probability `p`, one random character edit.
fn entity_typos<R: Rng>(s: &Sentence, p: f64, rng: &mut R) -> AlignedSentence {
    let mut out = AlignedSentence::identity(s);
    for (i, tok) in out.augmented.tokens.iter_mut().enumerate() {
        if s.tags[i] != OUTSIDE && rng.random_bool(p) {
            let edit = sample_char_edit(tok, rng);
            *tok = apply_char_edit(tok, edit);
        }
    }
    out
}

/// The three physical key rows; vertical neighbors follow the usual stagger
/// (the key below sits between columns c-1 and c).
const QWERTY_ROWS: [&str; 3] = ["qwertyuiop", "asdfghjkl", "zxcvbnm"];

fn qwerty_neighbors(c: char) -> Vec<char> {
    let mut pos = None;
    for (r, row) in QWERTY_ROWS.iter().enumerate() {
        if let Some(col) = row.chars().position(|x| x == c) {
            pos = Some((r as isize, col as isize));
        }
    }
    let Some((r, col)) = pos else { return Vec::new() };
    let mut out = Vec::new();
    let push = |row: isize, c0: isize, out: &mut Vec<char>| {
        if !(0..3).contains(&row) || c0 < 0 {
            return;
        }
        if let Some(ch) = QWERTY_ROWS[row as usize].chars().nth(c0 as usize) {
            out.push(ch);
        }
    };
    push(r, col - 1, &mut out);
    push(r, col + 1, &mut out);
    push(r + 1, col - 1, &mut out);
    push(r + 1, col, &mut out);
    push(r - 1, col, &mut out);
    push(r - 1, col + 1, &mut out);
    out
}

/// Keyboard noise: each token, with probability `p`, has one of its mappable
/// characters replaced by a neighboring key.
fn keyboard<R: Rng>(s: &Sentence, p: f64, rng: &mut R) -> AlignedSentence {
    let mut out = AlignedSentence::identity(s);
    for tok in &mut out.augmented.tokens {
        if !rng.random_bool(p) {
            continue;
        }
        let chars: Vec<char> = tok.chars().collect();
        let mappable: Vec<usize> =
            (0..chars.len()).filter(|&i| !qwerty_neighbors(chars[i]).is_empty()).collect();
        let Some(&at) = mappable.choose(rng) else { continue };
        let neighbors = qwerty_neighbors(chars[at]);
        let replacement = *neighbors.choose(rng).expect("mappable char has neighbors");
        let mut next = chars;
        next[at] = replacement;
        *tok = next.into_iter().collect();
    }
    out
}

/// Appends one uniformly chosen irrelevant clause, every appended token
/// tagged O. Applied unconditionally: the process is about presence of the
/// clause, not a per-token rate.
fn append_irr<R: Rng>(s: &Sentence, rng: &mut R) -> AlignedSentence {
    let clause = IRRELEVANT_CLAUSES.choose(rng).expect("clause pool is non-empty");
    let mut out = AlignedSentence::identity(s);
    for word in clause.split_whitespace() {
        out.augmented.tokens.push(word.to_string());
        out.augmented.tags.push(OUTSIDE.to_string());
        out.alignment.push(None);
    }
    out
}

/// Concatenates a uniformly chosen other sentence of the split, keeping its
/// real tags. Applied unconditionally.
fn concat_sent<R: Rng>(s: &Sentence, ds: &Dataset, index: usize, rng: &mut R) -> AlignedSentence {
    let n = ds.sentences.len();
    let partner_index = if n > 1 {
        let draw = rng.random_range(0..n - 1);
        if draw >= index {
            draw + 1
        } else {
            draw
        }
    } else {
        index
    };
    let partner = &ds.sentences[partner_index];
    let mut out = AlignedSentence::identity(s);
    for (tok, tag) in partner.tokens.iter().zip(&partner.tags) {
        out.augmented.tokens.push(tok.clone());
        out.augmented.tags.push(tag.clone());
        out.alignment.push(None);
    }
    out
}

/// Deletes O-tagged tokens with probability `p` each; slot tokens always
/// survive. Shares the deletion driver (and its I-to-B promotion and
/// keep-last fallback) with the word-deletion augmentation.
fn simplify<R: Rng>(s: &Sentence, p: f64, rng: &mut R) -> AlignedSentence {
    let keep: Vec<bool> =
        s.tags.iter().map(|tag| tag != OUTSIDE || !rng.random_bool(p)).collect();
    delete_by_mask(s, keep)
}

/// Builds a dataset view of the noisy side of a pair list, e.g. for CoNLL
/// serialization of a noisy benchmark.
pub fn pairs_to_dataset(name: &str, split: crate::corpus::Split, pairs: &[NoisePair]) -> Dataset {
    Dataset {
        name: name.to_string(),
        split,
        sentences: pairs.iter().map(|p| p.noisy.clone()).collect(),
    }
}

/// Sidecar alignment serialization: one line per sentence, space-separated
/// clean indices, `-` for inserted tokens.
pub fn write_alignment_sidecar(pairs: &[NoisePair]) -> String {
    let mut out = String::new();
    for pair in pairs {
        let fields: Vec<String> = pair
            .alignment
            .iter()
            .map(|a| match a {
                Some(i) => i.to_string(),
                None => "-".to_string(),
            })
            .collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_alignment_sidecar(text: &str) -> Result<Vec<Vec<Option<usize>>>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut row = Vec::new();
        for field in line.split_whitespace() {
            if field == "-" {
                row.push(None);
            } else {
                let idx = field.parse::<usize>().map_err(|_| {
                    Error::Data(format!(
                        "alignment sidecar line {}: bad index {field:?}",
                        lineno + 1
                    ))
                })?;
                row.push(Some(idx));
            }
        }
        out.push(row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;

    fn sentence(tokens: &[&str], tags: &[&str]) -> Sentence {
        Sentence::new(
            tokens.iter().map(|t| t.to_string()).collect(),
            tags.iter().map(|t| t.to_string()).collect(),
        )
        .unwrap()
    }

    fn dataset() -> Dataset {
        Dataset {
            name: "t".into(),
            split: Split::Test,
            sentences: vec![
                sentence(
                    &["book", "a", "cheap", "hotel"],
                    &["O", "O", "B-price", "B-kind"],
                ),
                sentence(&["find", "dim", "sum", "nearby"], &["O", "B-food", "I-food", "O"]),
                sentence(&["thanks", "for", "everything"], &["O", "O", "O"]),
            ],
        }
    }

    fn spec(kind: NoiseKind, intensity: f64) -> NoiseSpec {
        NoiseSpec::new(kind, intensity, 99)
    }

    #[test]
    fn zero_intensity_is_identity_for_non_appending_kinds() {
        let ds = dataset();
        let hom = crate::text_augment::Lexicon::builtin_homophones();
        let syn = crate::text_augment::Lexicon::builtin_synonyms();
        let res = NoiseResources { homophones: Some(&hom), synonyms: Some(&syn) };
        for kind in [
            NoiseKind::Typos,
            NoiseKind::Keyboard,
            NoiseKind::SpellingError,
            NoiseKind::Homophone,
            NoiseKind::SynonymSwap,
            NoiseKind::Simplify,
        ] {
            let pairs = apply_noise(&ds, &spec(kind.clone(), 0.0), &res).unwrap();
            for (i, p) in pairs.iter().enumerate() {
                assert_eq!(p.noisy, ds.sentences[i], "{kind}");
                assert_eq!(p.original_index, i);
            }
        }
    }

    #[test]
    fn typos_touch_only_entity_tokens() {
        let ds = dataset();
        let pairs =
            apply_noise(&ds, &spec(NoiseKind::Typos, 1.0), &NoiseResources::default()).unwrap();
        for (pair, clean) in pairs.iter().zip(&ds.sentences) {
            assert_eq!(pair.noisy.len(), clean.len());
            for (j, tag) in clean.tags.iter().enumerate() {
                if tag == "O" {
                    assert_eq!(pair.noisy.tokens[j], clean.tokens[j]);
                } else {
                    assert_ne!(pair.noisy.tokens[j], clean.tokens[j]);
                }
            }
            assert_eq!(pair.noisy.tags, clean.tags);
        }
    }

    #[test]
    fn keyboard_replaces_with_adjacent_keys() {
        let ds = dataset();
        let pairs =
            apply_noise(&ds, &spec(NoiseKind::Keyboard, 1.0), &NoiseResources::default()).unwrap();
        let mut changed = 0usize;
        for (pair, clean) in pairs.iter().zip(&ds.sentences) {
            for (noisy_tok, clean_tok) in pair.noisy.tokens.iter().zip(&clean.tokens) {
                let a: Vec<char> = clean_tok.chars().collect();
                let b: Vec<char> = noisy_tok.chars().collect();
                assert_eq!(a.len(), b.len());
                for (x, y) in a.iter().zip(&b) {
                    if x != y {
                        changed += 1;
                        assert!(
                            qwerty_neighbors(*x).contains(y),
                            "{y} is not adjacent to {x}"
                        );
                    }
                }
            }
        }
        assert!(changed > 0);
    }

    #[test]
    fn qwerty_neighbor_relation_is_symmetric() {
        for row in QWERTY_ROWS {
            for c in row.chars() {
                for n in qwerty_neighbors(c) {
                    assert!(qwerty_neighbors(n).contains(&c), "{c} -> {n} not symmetric");
                }
            }
        }
    }

    #[test]
    fn append_irr_appends_outside_clause() {
        let ds = dataset();
        let pairs =
            apply_noise(&ds, &spec(NoiseKind::AppendIrr, 0.0), &NoiseResources::default()).unwrap();
        for (pair, clean) in pairs.iter().zip(&ds.sentences) {
            assert!(pair.noisy.len() > clean.len());
            for j in 0..clean.len() {
                assert_eq!(pair.noisy.tokens[j], clean.tokens[j]);
                assert_eq!(pair.alignment[j], Some(j));
            }
            for j in clean.len()..pair.noisy.len() {
                assert_eq!(pair.noisy.tags[j], "O");
                assert_eq!(pair.alignment[j], None);
            }
        }
    }

    #[test]
    fn concat_sent_appends_partner_with_real_tags() {
        let ds = dataset();
        let pairs =
            apply_noise(&ds, &spec(NoiseKind::ConcatSent, 0.0), &NoiseResources::default())
                .unwrap();
        for (i, pair) in pairs.iter().enumerate() {
            let clean = &ds.sentences[i];
            let tail_tokens = &pair.noisy.tokens[clean.len()..];
            let tail_tags = &pair.noisy.tags[clean.len()..];
            let partner = ds
                .sentences
                .iter()
                .enumerate()
                .find(|(j, p)| *j != i && p.tokens == tail_tokens && p.tags == tail_tags);
            assert!(partner.is_some(), "tail must be a verbatim other sentence");
        }
    }

    #[test]
    fn simplify_deletes_only_context_tokens() {
        let ds = dataset();
        let pairs =
            apply_noise(&ds, &spec(NoiseKind::Simplify, 1.0), &NoiseResources::default()).unwrap();
        // Sentence 0: both slot tokens survive.
        assert_eq!(pairs[0].noisy.tokens, vec!["cheap", "hotel"]);
        assert_eq!(pairs[0].noisy.tags, vec!["B-price", "B-kind"]);
        // Sentence 1: the chunk survives intact.
        assert_eq!(pairs[1].noisy.tokens, vec!["dim", "sum"]);
        assert_eq!(pairs[1].noisy.tags, vec!["B-food", "I-food"]);
        // Sentence 2 is all O: the keep-last fallback applies.
        assert_eq!(pairs[2].noisy.tokens, vec!["everything"]);
    }

    #[test]
    fn simplify_preserves_span_multiset() {
        let ds = dataset();
        for seed in 0..20 {
            let pairs = apply_noise(
                &ds,
                &NoiseSpec::new(NoiseKind::Simplify, 0.6, seed),
                &NoiseResources::default(),
            )
            .unwrap();
            for (pair, clean) in pairs.iter().zip(&ds.sentences) {
                let clean_spans = crate::corpus::extract_spans(&clean.tags);
                let noisy_spans = crate::corpus::extract_spans(&pair.noisy.tags);
                assert_eq!(clean_spans.len(), noisy_spans.len());
                let clean_types: Vec<&str> =
                    clean_spans.iter().map(|s| s.slot_type.as_str()).collect();
                let noisy_types: Vec<&str> =
                    noisy_spans.iter().map(|s| s.slot_type.as_str()).collect();
                assert_eq!(clean_types, noisy_types);
            }
        }
    }

    #[test]
    fn mixed_equals_manual_sequential_composition() {
        let ds = dataset();
        let syn = crate::text_augment::Lexicon::builtin_synonyms();
        let res = NoiseResources { homophones: None, synonyms: Some(&syn) };
        let seed = 1234;
        let mixed = NoiseSpec::new(
            NoiseKind::Mixed(vec![
                NoiseKind::Typos,
                NoiseKind::SynonymSwap,
                NoiseKind::AppendIrr,
            ]),
            0.6,
            seed,
        );
        let got = apply_noise(&ds, &mixed, &res).unwrap();

        // Manual chain, composing alignments inline rather than through
        // compose_alignments.
        let stage1 = apply_noise(
            &ds,
            &NoiseSpec::new(NoiseKind::Typos, 0.6, component_seed(seed, 0)),
            &res,
        )
        .unwrap();
        let mid = pairs_to_dataset("t", Split::Test, &stage1);
        let stage2 = apply_noise(
            &mid,
            &NoiseSpec::new(NoiseKind::SynonymSwap, 0.6, component_seed(seed, 1)),
            &res,
        )
        .unwrap();
        let mid2 = pairs_to_dataset("t", Split::Test, &stage2);
        let stage3 = apply_noise(
            &mid2,
            &NoiseSpec::new(NoiseKind::AppendIrr, 0.6, component_seed(seed, 2)),
            &res,
        )
        .unwrap();
        for i in 0..ds.sentences.len() {
            assert_eq!(got[i].noisy, stage3[i].noisy);
            let manual: Vec<Option<usize>> = stage3[i]
                .alignment
                .iter()
                .map(|a3| {
                    a3.and_then(|m2| stage2[i].alignment[m2])
                        .and_then(|m1| stage1[i].alignment[m1])
                })
                .collect();
            assert_eq!(got[i].alignment, manual);
        }
    }

    #[test]
    fn same_seed_reproduces_noisy_set() {
        let ds = dataset();
        let s = spec(NoiseKind::SpellingError, 0.5);
        let a = apply_noise(&ds, &s, &NoiseResources::default()).unwrap();
        let b = apply_noise(&ds, &s, &NoiseResources::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_lexicons_are_config_errors() {
        let ds = dataset();
        let res = NoiseResources::default();
        assert!(apply_noise(&ds, &spec(NoiseKind::Homophone, 0.3), &res).is_err());
        assert!(apply_noise(&ds, &spec(NoiseKind::SynonymSwap, 0.3), &res).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(spec(NoiseKind::Typos, 1.5).validate().is_err());
        assert!(spec(NoiseKind::Mixed(vec![]), 0.3).validate().is_err());
        assert!(spec(
            NoiseKind::Mixed(vec![NoiseKind::Mixed(vec![NoiseKind::Typos])]),
            0.3
        )
        .validate()
        .is_err());
        assert!(spec(NoiseKind::Mixed(vec![NoiseKind::Typos]), 0.3).validate().is_ok());
    }

    #[test]
    fn kind_names_round_trip() {
        let kinds = [
            NoiseKind::Typos,
            NoiseKind::Keyboard,
            NoiseKind::SpellingError,
            NoiseKind::Homophone,
            NoiseKind::SynonymSwap,
            NoiseKind::AppendIrr,
            NoiseKind::ConcatSent,
            NoiseKind::Simplify,
            NoiseKind::Mixed(vec![NoiseKind::Typos, NoiseKind::AppendIrr]),
        ];
        for kind in kinds {
            assert_eq!(NoiseKind::from_str(&kind.name()).unwrap(), kind);
        }
        assert!(NoiseKind::from_str("gibberish").is_err());
    }

    #[test]
    fn alignment_sidecar_round_trips() {
        let ds = dataset();
        let pairs = apply_noise(
            &ds,
            &spec(NoiseKind::Mixed(vec![NoiseKind::Simplify, NoiseKind::AppendIrr]), 0.7),
            &NoiseResources::default(),
        )
        .unwrap();
        let text = write_alignment_sidecar(&pairs);
        let back = parse_alignment_sidecar(&text).unwrap();
        let expect: Vec<Vec<Option<usize>>> =
            pairs.iter().map(|p| p.alignment.clone()).collect();
        assert_eq!(back, expect);
    }
}
