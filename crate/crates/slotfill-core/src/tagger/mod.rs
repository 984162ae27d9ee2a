//! The sequence tagger: embedder, BiLSTM encoder, projection, and a CRF (or
//! plain softmax) emission layer, with exact hand-derived gradients for the
//! whole stack.
//!
//! Tensors are `ndarray` double-precision arrays. The forward pass records a
//! [`ForwardTrace`] so that [`backward`] can replay every intermediate; the
//! trace also exposes the embedded matrix E and hidden matrix H that the
//! feature-level augmentations and consistency losses operate on.

mod checkpoint;
mod crf;
mod embed;
mod lstm;
pub(crate) mod math;

use ndarray::{Array2, ArrayView2, ArrayViewD, ArrayViewMutD, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabelScheme, Vocabulary};
use crate::error::{Error, Result};

pub use checkpoint::{load_pretrained_embeddings, Checkpoint};
pub use crf::{
    argmax_decode, crf_log_partition, crf_nll, crf_nll_backward, crf_score, end_state,
    start_state, token_ce_backward, token_ce_nll, viterbi,
};
pub(crate) use embed::{backward_embed, embed_with_trace, EmbedTrace};
pub(crate) use lstm::{backward_encode, encode_with_trace, EncodeTrace};

/// Emission layer variant. The CRF head is the primary configuration; the
/// per-token softmax head exists for ablation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmissionMode {
    #[default]
    Crf,
    Softmax,
}

/// Whether a forward pass applies the internal embedding dropout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Architecture hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperConfig {
    /// Word embedding width.
    #[serde(default = "default_word_dim")]
    pub word_dim: usize,
    /// Character embedding width (the char channel is the mean over the
    /// token's characters).
    #[serde(default = "default_char_dim")]
    pub char_dim: usize,
    /// Hidden size per LSTM direction.
    #[serde(default = "default_hidden_dim")]
    pub hidden_dim: usize,
    /// Internal inverted-dropout rate on the embedded matrix, train mode only.
    #[serde(default = "default_dropout")]
    pub dropout: f64,
    /// Parameter initialization seed.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub emission: EmissionMode,
}

fn default_word_dim() -> usize {
    64
}
fn default_char_dim() -> usize {
    16
}
fn default_hidden_dim() -> usize {
    128
}
fn default_dropout() -> f64 {
    0.2
}

impl Default for HyperConfig {
    fn default() -> Self {
        HyperConfig {
            word_dim: default_word_dim(),
            char_dim: default_char_dim(),
            hidden_dim: default_hidden_dim(),
            dropout: default_dropout(),
            seed: 0,
            emission: EmissionMode::Crf,
        }
    }
}

impl HyperConfig {
    pub fn validate(&self) -> Result<()> {
        if self.word_dim == 0 || self.char_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// One LSTM direction: input weights (4h x in), recurrent weights (4h x h),
/// bias (4h). Gate packing along the 4h axis is [input, forget, cell, output].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmCellParams {
    pub w: Array2<f64>,
    pub u: Array2<f64>,
    pub b: ndarray::Array1<f64>,
}

impl LstmCellParams {
    fn init<R: Rng>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        LstmCellParams {
            w: uniform_init((4 * hidden_dim, input_dim), rng),
            u: uniform_init((4 * hidden_dim, hidden_dim), rng),
            b: ndarray::Array1::zeros(4 * hidden_dim),
        }
    }

    fn zeros_like(&self) -> Self {
        LstmCellParams {
            w: Array2::zeros(self.w.raw_dim()),
            u: Array2::zeros(self.u.raw_dim()),
            b: ndarray::Array1::zeros(self.b.raw_dim()),
        }
    }
}

fn uniform_init<R: Rng>(shape: (usize, usize), rng: &mut R) -> Array2<f64> {
    Array2::from_shape_fn(shape, |_| rng.random_range(-0.1..0.1))
}

/// Every trainable tensor. Gradients reuse this struct via [`ModelParams::zeros_like`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// n_words x word_dim; rows 0 and 1 are the padding and UNK entries.
    pub word_emb: Array2<f64>,
    /// n_chars x char_dim.
    pub char_emb: Array2<f64>,
    pub fwd: LstmCellParams,
    pub bwd: LstmCellParams,
    /// 2h x K.
    pub proj_w: Array2<f64>,
    /// K.
    pub proj_b: ndarray::Array1<f64>,
    /// (K+2) x (K+2) CRF transition scores including the START/END states.
    pub trans: Array2<f64>,
}

/// Stable names for the tensor groups, in [`ModelParams::tensors`] order.
pub const PARAM_GROUPS: [&str; 11] = [
    "word_emb", "char_emb", "lstm_fwd_w", "lstm_fwd_u", "lstm_fwd_b", "lstm_bwd_w", "lstm_bwd_u",
    "lstm_bwd_b", "proj_w", "proj_b", "trans",
];

impl ModelParams {
    /// Seeded initialization: uniform(-0.1, 0.1) for embeddings and weight
    /// matrices, zeros for biases and transitions.
    pub fn init(hyper: &HyperConfig, vocab: &Vocabulary, scheme: &LabelScheme) -> ModelParams {
        let mut rng = ChaCha20Rng::seed_from_u64(hyper.seed);
        let d = hyper.word_dim + hyper.char_dim;
        let h = hyper.hidden_dim;
        let k = scheme.k();
        ModelParams {
            word_emb: uniform_init((vocab.n_words(), hyper.word_dim), &mut rng),
            char_emb: uniform_init((vocab.n_chars(), hyper.char_dim), &mut rng),
            fwd: LstmCellParams::init(d, h, &mut rng),
            bwd: LstmCellParams::init(d, h, &mut rng),
            proj_w: uniform_init((2 * h, k), &mut rng),
            proj_b: ndarray::Array1::zeros(k),
            trans: Array2::zeros((k + 2, k + 2)),
        }
    }

    /// Same shapes, all zeros; the gradient accumulator.
    pub fn zeros_like(&self) -> ModelParams {
        ModelParams {
            word_emb: Array2::zeros(self.word_emb.raw_dim()),
            char_emb: Array2::zeros(self.char_emb.raw_dim()),
            fwd: self.fwd.zeros_like(),
            bwd: self.bwd.zeros_like(),
            proj_w: Array2::zeros(self.proj_w.raw_dim()),
            proj_b: ndarray::Array1::zeros(self.proj_b.raw_dim()),
            trans: Array2::zeros(self.trans.raw_dim()),
        }
    }

    /// Hidden size per direction, recovered from the recurrent weights.
    pub fn hidden_dim(&self) -> usize {
        self.fwd.u.ncols()
    }

    /// Number of emission labels K.
    pub fn k(&self) -> usize {
        self.proj_b.len()
    }

    /// Read-only views of all tensor groups in [`PARAM_GROUPS`] order.
    pub fn tensors(&self) -> Vec<ArrayViewD<'_, f64>> {
        vec![
            self.word_emb.view().into_dyn(),
            self.char_emb.view().into_dyn(),
            self.fwd.w.view().into_dyn(),
            self.fwd.u.view().into_dyn(),
            self.fwd.b.view().into_dyn(),
            self.bwd.w.view().into_dyn(),
            self.bwd.u.view().into_dyn(),
            self.bwd.b.view().into_dyn(),
            self.proj_w.view().into_dyn(),
            self.proj_b.view().into_dyn(),
            self.trans.view().into_dyn(),
        ]
    }

    /// Mutable views of all tensor groups in [`PARAM_GROUPS`] order.
    pub fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        vec![
            self.word_emb.view_mut().into_dyn(),
            self.char_emb.view_mut().into_dyn(),
            self.fwd.w.view_mut().into_dyn(),
            self.fwd.u.view_mut().into_dyn(),
            self.fwd.b.view_mut().into_dyn(),
            self.bwd.w.view_mut().into_dyn(),
            self.bwd.u.view_mut().into_dyn(),
            self.bwd.b.view_mut().into_dyn(),
            self.proj_w.view_mut().into_dyn(),
            self.proj_b.view_mut().into_dyn(),
            self.trans.view_mut().into_dyn(),
        ]
    }

    /// Checks internal shape consistency and agreement with a vocabulary and
    /// label scheme.
    pub fn validate(&self, vocab: &Vocabulary, scheme: &LabelScheme) -> Result<()> {
        let d = self.word_emb.ncols() + self.char_emb.ncols();
        let h = self.hidden_dim();
        let k = self.k();
        let checks = [
            (self.word_emb.nrows() == vocab.n_words(), "word embedding rows"),
            (self.char_emb.nrows() == vocab.n_chars(), "char embedding rows"),
            (self.fwd.w.shape() == [4 * h, d], "forward input weights"),
            (self.bwd.w.shape() == [4 * h, d], "backward input weights"),
            (self.fwd.u.shape() == [4 * h, h], "forward recurrent weights"),
            (self.bwd.u.shape() == [4 * h, h], "backward recurrent weights"),
            (self.fwd.b.len() == 4 * h, "forward bias"),
            (self.bwd.b.len() == 4 * h, "backward bias"),
            (self.proj_w.shape() == [2 * h, k], "projection weights"),
            (k == scheme.k(), "emission label count"),
            (self.trans.shape() == [k + 2, k + 2], "transition matrix"),
        ];
        for (ok, what) in checks {
            if !ok {
                return Err(Error::Config(format!("checkpoint shape mismatch: {what}")));
            }
        }
        if self.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::Config("non-finite model parameter".into()));
        }
        Ok(())
    }
}

/// Encoder and projection activations for one sentence.
#[derive(Clone, Debug)]
pub struct NetTrace {
    pub(crate) encode: EncodeTrace,
    pub(crate) p: Array2<f64>,
}

impl NetTrace {
    /// The matrix the encoder consumed (E, possibly feature-augmented).
    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.encode.x.view()
    }

    /// Hidden matrix H, L x 2h.
    pub fn h(&self) -> ArrayView2<'_, f64> {
        self.encode.h.view()
    }

    /// Logits P, L x K.
    pub fn p(&self) -> ArrayView2<'_, f64> {
        self.p.view()
    }
}

/// Full forward cache: embedding stage plus network stage.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub(crate) embed: EmbedTrace,
    pub(crate) net: NetTrace,
}

impl ForwardTrace {
    /// Embedded matrix E (after internal dropout in train mode), L x (d_w+d_c).
    pub fn e(&self) -> ArrayView2<'_, f64> {
        self.embed.e.view()
    }

    pub fn h(&self) -> ArrayView2<'_, f64> {
        self.net.h()
    }

    pub fn p(&self) -> ArrayView2<'_, f64> {
        self.net.p()
    }
}

/// Runs the embedder alone. Training-mode dropout draws from `rng`.
pub(crate) fn embed<R: Rng>(
    params: &ModelParams,
    hyper: &HyperConfig,
    vocab: &Vocabulary,
    tokens: &[String],
    mode: Mode,
    rng: Option<&mut R>,
) -> Result<EmbedTrace> {
    if tokens.is_empty() {
        return Err(Error::Data("cannot embed an empty sentence".into()));
    }
    embed_with_trace(params, hyper, vocab, tokens, mode, rng)
}

/// BiLSTM over an embedded matrix; returns H only. See [`forward`] for the
/// trace-recording variant the training loop uses.
pub fn encode(params: &ModelParams, e: &ArrayView2<f64>) -> Array2<f64> {
    encode_with_trace(params, e.to_owned()).h
}

/// Projection layer: P = H * proj_w + proj_b per row.
pub fn project(params: &ModelParams, h: &ArrayView2<f64>) -> Array2<f64> {
    h.dot(&params.proj_w) + &params.proj_b
}

/// Encoder plus projection on an externally supplied feature matrix. This is
/// the entry point for the feature-augmented branch, where E has already
/// been perturbed.
pub fn forward_on_features(params: &ModelParams, features: Array2<f64>) -> NetTrace {
    let encode = encode_with_trace(params, features);
    let p = project(params, &encode.h.view());
    NetTrace { encode, p }
}

/// Full forward pass over raw tokens.
pub fn forward<R: Rng>(
    params: &ModelParams,
    hyper: &HyperConfig,
    vocab: &Vocabulary,
    tokens: &[String],
    mode: Mode,
    rng: Option<&mut R>,
) -> Result<ForwardTrace> {
    let embed = embed(params, hyper, vocab, tokens, mode, rng)?;
    let net = forward_on_features(params, embed.e.clone());
    Ok(ForwardTrace { embed, net })
}

/// Eval-mode forward pass (no dropout, no randomness).
pub fn forward_eval(
    params: &ModelParams,
    hyper: &HyperConfig,
    vocab: &Vocabulary,
    tokens: &[String],
) -> Result<ForwardTrace> {
    forward::<ChaCha20Rng>(params, hyper, vocab, tokens, Mode::Eval, None)
}

/// Backpropagates through projection and encoder. `d_p` is the loss gradient
/// w.r.t. the logits; `d_h_extra` is an optional additional gradient applied
/// directly to H (the representation-consistency loss needs it). Returns the
/// gradient w.r.t. the matrix the encoder consumed.
pub(crate) fn backward_net(
    params: &ModelParams,
    net: &NetTrace,
    d_p: Option<&ArrayView2<f64>>,
    d_h_extra: Option<&ArrayView2<f64>>,
    grads: &mut ModelParams,
) -> Array2<f64> {
    let l = net.encode.x.nrows();
    let mut d_h = Array2::<f64>::zeros((l, 2 * params.hidden_dim()));
    if let Some(d_p) = d_p {
        d_h += &d_p.dot(&params.proj_w.t());
        grads.proj_w += &net.encode.h.t().dot(d_p);
        grads.proj_b += &d_p.sum_axis(Axis(0));
    }
    if let Some(extra) = d_h_extra {
        d_h += extra;
    }
    let mut d_x = Array2::<f64>::zeros(net.encode.x.raw_dim());
    backward_encode(params, &net.encode, &d_h.view(), grads, &mut d_x);
    d_x
}

/// Full backward pass for a trace produced by [`forward`]: accumulates every
/// parameter gradient into `grads` and returns dLoss/dE, the gradient w.r.t.
/// the embedded matrix (what the Adv augmentation perturbs).
pub fn backward(
    params: &ModelParams,
    trace: &ForwardTrace,
    d_p: &ArrayView2<f64>,
    grads: &mut ModelParams,
) -> Array2<f64> {
    let d_e = backward_net(params, &trace.net, Some(d_p), None, grads);
    backward_embed(&trace.embed, &d_e.view(), grads);
    d_e
}

/// Decodes one sentence to tag indices under the configured emission mode.
pub fn predict_indices(
    params: &ModelParams,
    hyper: &HyperConfig,
    vocab: &Vocabulary,
    tokens: &[String],
) -> Result<Vec<usize>> {
    let trace = forward_eval(params, hyper, vocab, tokens)?;
    match hyper.emission {
        EmissionMode::Crf => viterbi(&trace.p(), &params.trans.view()),
        EmissionMode::Softmax => Ok(argmax_decode(&trace.p())),
    }
}

/// Decodes one sentence to tag strings.
pub fn predict(
    params: &ModelParams,
    hyper: &HyperConfig,
    vocab: &Vocabulary,
    scheme: &LabelScheme,
    tokens: &[String],
) -> Result<Vec<String>> {
    let indices = predict_indices(params, hyper, vocab, tokens)?;
    Ok(indices.iter().map(|&i| scheme.index_to_tag(i).to_string()).collect())
}
