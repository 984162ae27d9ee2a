//! Model persistence. A checkpoint is a single JSON document carrying the
//! hyperparameters, vocabulary, label scheme, and every tensor; doubles
//! survive the round trip exactly (shortest-representation printing).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{LabelScheme, Vocabulary};
use crate::error::{Error, Result};
use crate::tagger::{HyperConfig, ModelParams};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub hyper: HyperConfig,
    pub vocab: Vocabulary,
    pub scheme: LabelScheme,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn new(
        hyper: HyperConfig,
        vocab: Vocabulary,
        scheme: LabelScheme,
        params: ModelParams,
    ) -> Result<Checkpoint> {
        hyper.validate()?;
        params.validate(&vocab, &scheme)?;
        Ok(Checkpoint { hyper, vocab, scheme, params })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Parses and validates; a structurally valid document with mismatched
    /// tensor shapes is rejected here rather than at first use.
    pub fn from_json(text: &str) -> Result<Checkpoint> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        ckpt.hyper.validate()?;
        ckpt.params.validate(&ckpt.vocab, &ckpt.scheme)?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        Checkpoint::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Loads pretrained word vectors in the plain text format `word v1 v2 ... v_dw`
/// (one entry per line, whitespace separated). Rows for in-vocabulary words
/// are overwritten; everything else is left at its initialized value.
/// Returns how many vocabulary rows were filled.
pub fn load_pretrained_embeddings(
    text: &str,
    vocab: &Vocabulary,
    params: &mut ModelParams,
) -> Result<usize> {
    let dim = params.word_emb.ncols();
    let mut loaded = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("non-empty line has a first field");
        let values: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::Data(format!(
                        "pretrained embeddings line {}: bad float {f:?}",
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::Data(format!(
                "pretrained embeddings line {}: expected {dim} values, got {}",
                lineno + 1,
                values.len()
            )));
        }
        let Some(wid) = vocab.known_word_id(word) else { continue };
        for (j, v) in values.iter().enumerate() {
            params.word_emb[(wid, j)] = *v;
        }
        loaded += 1;
    }
    Ok(loaded)
}
