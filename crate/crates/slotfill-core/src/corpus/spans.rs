//! Chunk extraction under the conlleval convention and its inverse.

use crate::corpus::{tag_shape, Span, OUTSIDE};

/// Extracts maximal chunks from a BIO tag sequence.
///
/// conlleval convention: "B-t" always starts a chunk; "I-t" continues a
/// running chunk of type t and otherwise starts a new one. Malformed tags
/// are treated as "O". Output is sorted by start and pairwise disjoint.
pub fn extract_spans<S: AsRef<str>>(tags: &[S]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, &str)> = None;
    for (i, tag) in tags.iter().enumerate() {
        let (role, ty) = tag_shape(tag.as_ref()).unwrap_or((b'O', ""));
        let continues = role == b'I' && matches!(open, Some((_, t)) if t == ty);
        if continues {
            continue;
        }
        if let Some((start, open_ty)) = open.take() {
            spans.push(Span::new(start, i, open_ty));
        }
        if role != b'O' {
            open = Some((i, ty));
        }
    }
    if let Some((start, ty)) = open {
        spans.push(Span::new(start, tags.len(), ty));
    }
    spans
}

/// Renders spans back to a BIO sequence of the given length. Positions not
/// covered by any span become "O". Spans must be disjoint and in range.
pub fn spans_to_bio(spans: &[Span], len: usize) -> Vec<String> {
    let mut tags = vec![OUTSIDE.to_string(); len];
    for span in spans {
        assert!(span.start < span.end && span.end <= len, "span out of range");
        tags[span.start] = format!("B-{}", span.slot_type);
        for tag in &mut tags[span.start + 1..span.end] {
            *tag = format!("I-{}", span.slot_type);
        }
    }
    tags
}
