//! Token embedding: word vector concatenated with the mean of the token's
//! character vectors, with inverted dropout in training mode.

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::corpus::Vocabulary;
use crate::error::Result;
use crate::tagger::{HyperConfig, Mode, ModelParams};

/// Embedding cache: the matrix handed to the encoder plus everything the
/// backward pass needs to route gradients into the lookup tables.
#[derive(Clone, Debug)]
pub(crate) struct EmbedTrace {
    pub e: Array2<f64>,
    pub word_ids: Vec<usize>,
    pub char_ids: Vec<Vec<usize>>,
    /// Inverted-dropout multipliers (0 or 1/(1-rate)); absent in eval mode
    /// and when the rate is zero.
    pub drop_mask: Option<Array2<f64>>,
}

pub(crate) fn embed_with_trace<R: Rng>(
    params: &ModelParams,
    hyper: &HyperConfig,
    vocab: &Vocabulary,
    tokens: &[String],
    mode: Mode,
    mut rng: Option<&mut R>,
) -> Result<EmbedTrace> {
    let d_w = params.word_emb.ncols();
    let d_c = params.char_emb.ncols();
    let l = tokens.len();
    let mut e = Array2::<f64>::zeros((l, d_w + d_c));
    let mut word_ids = Vec::with_capacity(l);
    let mut char_ids = Vec::with_capacity(l);
    for (t, token) in tokens.iter().enumerate() {
        let wid = vocab.word_id(token);
        word_ids.push(wid);
        let cids: Vec<usize> = token.chars().map(|c| vocab.char_id(c)).collect();
        for j in 0..d_w {
            e[(t, j)] = params.word_emb[(wid, j)];
        }
        if !cids.is_empty() {
            let inv = 1.0 / cids.len() as f64;
            for &cid in &cids {
                for j in 0..d_c {
                    e[(t, d_w + j)] += params.char_emb[(cid, j)] * inv;
                }
            }
        }
        char_ids.push(cids);
    }
    let drop_mask = if mode == Mode::Train && hyper.dropout > 0.0 {
        let rng = rng.as_mut().ok_or_else(|| {
            crate::error::Error::Config("training-mode embedding needs an rng".into())
        })?;
        let keep = 1.0 / (1.0 - hyper.dropout);
        let mask = Array2::from_shape_fn((l, d_w + d_c), |_| {
            if rng.random_bool(hyper.dropout) {
                0.0
            } else {
                keep
            }
        });
        e *= &mask;
        Some(mask)
    } else {
        None
    };
    Ok(EmbedTrace { e, word_ids, char_ids, drop_mask })
}

/// Routes the gradient w.r.t. the embedded matrix back into the lookup
/// tables, undoing the dropout scaling first.
pub(crate) fn backward_embed(trace: &EmbedTrace, d_e: &ArrayView2<f64>, grads: &mut ModelParams) {
    let d_w = grads.word_emb.ncols();
    let d_c = grads.char_emb.ncols();
    for t in 0..trace.word_ids.len() {
        let wid = trace.word_ids[t];
        let cids = &trace.char_ids[t];
        let inv = if cids.is_empty() { 0.0 } else { 1.0 / cids.len() as f64 };
        for j in 0..d_w {
            let mut g = d_e[(t, j)];
            if let Some(m) = &trace.drop_mask {
                g *= m[(t, j)];
            }
            grads.word_emb[(wid, j)] += g;
        }
        for j in 0..d_c {
            let mut g = d_e[(t, d_w + j)];
            if let Some(m) = &trace.drop_mask {
                g *= m[(t, d_w + j)];
            }
            for &cid in cids {
                grads.char_emb[(cid, j)] += g * inv;
            }
        }
    }
}
