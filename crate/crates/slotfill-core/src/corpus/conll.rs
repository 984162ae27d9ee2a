//! CoNLL-style reading and writing: one "token<TAB>tag" per line, one blank
//! line between sentences.

use crate::corpus::{tag_shape, Dataset, Sentence, Split};
use crate::error::{Error, Result};

/// Parses a CoNLL document into a dataset.
///
/// Returns the dataset together with a warning list: an I-tag whose type does
/// not continue the preceding tag is accepted as-is and flagged here, matching
/// the scoring convention that repairs such tags only during span extraction.
pub fn parse_conll(text: &str, name: &str, split: Split) -> Result<(Dataset, Vec<String>)> {
    let mut sentences = Vec::new();
    let mut warnings = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut tags: Vec<String> = Vec::new();
    let mut block_start = 1usize;

    let mut flush = |tokens: &mut Vec<String>, tags: &mut Vec<String>, line: usize| -> Result<()> {
        if tokens.is_empty() {
            return Err(Error::Conll { line, msg: "empty sentence block".into() });
        }
        sentences.push(Sentence {
            tokens: std::mem::take(tokens),
            tags: std::mem::take(tags),
        });
        Ok(())
    };

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.is_empty() {
            // A blank line terminates the current block; two in a row would
            // delimit an empty block, which is malformed.
            if !tokens.is_empty() {
                flush(&mut tokens, &mut tags, block_start)?;
            } else if lineno > 1 {
                return Err(Error::Conll { line: lineno, msg: "empty sentence block".into() });
            }
            block_start = lineno + 1;
            continue;
        }
        let mut fields = line.split('\t');
        let (token, tag) = match (fields.next(), fields.next(), fields.next()) {
            (Some(tok), Some(tag), None) => (tok, tag),
            _ => {
                return Err(Error::Conll {
                    line: lineno,
                    msg: format!("expected exactly one tab separator, got {line:?}"),
                })
            }
        };
        if token.is_empty() {
            return Err(Error::Conll { line: lineno, msg: "empty token".into() });
        }
        let (role, ty) = tag_shape(tag).ok_or_else(|| Error::Conll {
            line: lineno,
            msg: format!("malformed tag {tag:?}"),
        })?;
        if role == b'I' {
            let continues = matches!(
                tags.last().map(|prev| tag_shape(prev).expect("stored tags are valid")),
                Some((b'B', prev_ty)) | Some((b'I', prev_ty)) if prev_ty == ty
            );
            if !continues {
                warnings.push(format!(
                    "line {lineno}: {tag} does not continue a {ty} chunk; will start a new chunk"
                ));
            }
        }
        tokens.push(token.to_string());
        tags.push(tag.to_string());
    }
    if !tokens.is_empty() {
        flush(&mut tokens, &mut tags, block_start)?;
    }
    Ok((Dataset::new(name, split, sentences), warnings))
}

/// Serializes a dataset to CoNLL text. Sentences are separated by a single
/// blank line; the document ends with one trailing newline.
pub fn write_conll(ds: &Dataset) -> String {
    let mut out = String::new();
    for (i, s) in ds.sentences.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for (tok, tag) in s.tokens.iter().zip(&s.tags) {
            out.push_str(tok);
            out.push('\t');
            out.push_str(tag);
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn parses_museum_fixture() {
        let text = "i\tO\nam\tO\nlooking\tO\nfor\tO\na\tO\nmuseum\tB-type\nto\tO\nvisit\tO\n.\tO\n";
        let (ds, warnings) = parse_conll(text, "fixture", Split::Test).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(ds.len(), 1);
        let s = &ds.sentences[0];
        assert_eq!(
            s.tokens,
            ["i", "am", "looking", "for", "a", "museum", "to", "visit", "."]
        );
        assert_eq!(s.tags, ["O", "O", "O", "O", "O", "B-type", "O", "O", "O"]);
    }

    #[test]
    fn empty_document_is_empty_dataset() {
        let (ds, warnings) = parse_conll("", "empty", Split::Train).unwrap();
        assert!(ds.is_empty());
        assert!(warnings.is_empty());
    }

    #[test]
    fn rejects_wrong_tab_count() {
        assert!(parse_conll("a b\n", "x", Split::Train).is_err());
        assert!(parse_conll("a\tO\textra\n", "x", Split::Train).is_err());
    }

    #[test]
    fn rejects_malformed_tag() {
        let err = parse_conll("a\tB_food\n", "x", Split::Train).unwrap_err();
        assert!(matches!(err, Error::Conll { line: 1, .. }));
    }

    #[test]
    fn rejects_empty_block() {
        let err = parse_conll("a\tO\n\n\nb\tO\n", "x", Split::Train).unwrap_err();
        assert!(matches!(err, Error::Conll { line: 3, .. }));
    }

    #[test]
    fn trailing_blank_line_is_fine() {
        let (ds, _) = parse_conll("a\tO\nb\tO\n\n", "x", Split::Train).unwrap();
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn flags_discontinuous_i_tag() {
        let (ds, warnings) = parse_conll("a\tO\nb\tI-food\n", "x", Split::Train).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("line 2"));
    }

    #[test]
    fn i_after_matching_b_is_clean() {
        let (_, warnings) = parse_conll("a\tB-food\nb\tI-food\n", "x", Split::Train).unwrap();
        assert!(warnings.is_empty());
    }

    /// Random valid dataset used by the round-trip oracle. Tags are built by
    /// a left-to-right walk so the BIO structure is well formed.
    fn random_dataset(rng: &mut ChaCha20Rng) -> Dataset {
        let types = ["food", "area", "price"];
        let n = rng.random_range(1..=8);
        let mut sentences = Vec::with_capacity(n);
        for _ in 0..n {
            let len = rng.random_range(1..=10);
            let mut tokens = Vec::with_capacity(len);
            let mut tags: Vec<String> = Vec::with_capacity(len);
            let mut i = 0;
            while i < len {
                let wlen = rng.random_range(1..=6);
                let word: String =
                    (0..wlen).map(|_| rng.random_range(b'a'..=b'z') as char).collect();
                tokens.push(word);
                if rng.random_bool(0.3) {
                    let ty = types[rng.random_range(0..types.len())];
                    tags.push(format!("B-{ty}"));
                    i += 1;
                    while i < len && rng.random_bool(0.4) {
                        let wlen = rng.random_range(1..=6);
                        tokens.push(
                            (0..wlen).map(|_| rng.random_range(b'a'..=b'z') as char).collect(),
                        );
                        tags.push(format!("I-{ty}"));
                        i += 1;
                    }
                } else {
                    tags.push("O".into());
                    i += 1;
                }
            }
            sentences.push(Sentence::new(tokens, tags).unwrap());
        }
        Dataset::new("rand", Split::Train, sentences)
    }

    #[test]
    fn roundtrip_on_random_datasets() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..100 {
            let ds = random_dataset(&mut rng);
            let text = write_conll(&ds);
            let (back, warnings) = parse_conll(&text, "rand", Split::Train).unwrap();
            assert!(warnings.is_empty());
            assert_eq!(ds, back);
        }
    }
}
