//! Consistency training: the combined objective L = L_normal + alpha *
//! L_consis over clean/augmented sample pairs, and the per-sentence training
//! loop around it.
//!
//! Three consistency objectives are available. `aug` supervises the
//! augmented sample with its repaired labels; `logits` penalizes the mean
//! per-token KL divergence between clean and augmented label distributions;
//! `repre` penalizes the mean squared difference between clean and augmented
//! encoder representations. The latter two compare matrices position by
//! position and therefore require a length-preserving augmentation; the
//! configuration gate rejects the six combinations that would change token
//! count before any training starts.

use std::fs;
use std::time::Instant;

use ndarray::{Array2, ArrayD, ArrayView2, Zip};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, LabelScheme, Sentence, UnigramSampler, Vocabulary};
use crate::error::{Error, Result};
use crate::feature_augment::{apply_feature_augment, FeatureAugmentConfig, FeatureAugmentMethod};
use crate::noise_eval::{component_seed, span_f1};
use crate::tagger::math::logsumexp;
use crate::tagger::{
    backward_embed, backward_net, crf_nll, crf_nll_backward, embed, forward, forward_on_features,
    predict, token_ce_backward, token_ce_nll, EmbedTrace, EmissionMode, HyperConfig, Mode,
    ModelParams,
};
use crate::text_augment::{apply_text_augment, AugmentResources, Lexicon, TextAugmentConfig,
    TextAugmentMethod,
};

/// Consistency objective selector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossType {
    /// Plain supervised training; the augmented branch is skipped entirely.
    #[default]
    None,
    /// Cross-entropy of the augmented pair under its repaired labels.
    Aug,
    /// Mean per-token KL(clean || augmented) over label distributions.
    Logits,
    /// Mean squared difference between the two encoder representations.
    Repre,
}

impl LossType {
    pub fn name(self) -> &'static str {
        match self {
            LossType::None => "none",
            LossType::Aug => "aug",
            LossType::Logits => "logits",
            LossType::Repre => "repre",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    /// Adaptive-moment gradient descent with bias correction.
    #[default]
    Adam,
    /// Plain stochastic gradient descent.
    Sgd,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    #[serde(default)]
    pub kind: OptimizerKind,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_adam_eps")]
    pub eps: f64,
}

fn default_learning_rate() -> f64 {
    1e-3
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_adam_eps() -> f64 {
    1e-8
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adam,
            learning_rate: default_learning_rate(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_adam_eps(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {beta}")));
            }
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::Config(format!("optimizer eps must be positive, got {}", self.eps)));
        }
        Ok(())
    }
}

/// Full training configuration.
///
/// The `seed` drives every random choice in the loop: epoch shuffles,
/// embedder dropout, and per-sentence augmentation draws each read a
/// dedicated stream derived from it, so runs with equal configuration are
/// bit-for-bit reproducible. The standalone `seed` fields inside the nested
/// augmentation configs are ignored here; augmentations are resampled fresh
/// for every sentence and epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// Consistency weight alpha in L = L_normal + alpha * L_consis.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub loss_type: LossType,
    #[serde(default)]
    pub text_augment: Option<TextAugmentConfig>,
    #[serde(default)]
    pub feature_augment: Option<FeatureAugmentConfig>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_shuffle")]
    pub shuffle: bool,
}

fn default_epochs() -> usize {
    12
}

fn default_alpha() -> f64 {
    1.0
}

fn default_shuffle() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: default_epochs(),
            alpha: default_alpha(),
            loss_type: LossType::default(),
            text_augment: None,
            feature_augment: None,
            optimizer: OptimizerConfig::default(),
            seed: 0,
            shuffle: default_shuffle(),
        }
    }
}

impl TrainConfig {
    /// Rejects invalid combinations before any training starts. In
    /// particular, a consistency loss that compares matrices position by
    /// position cannot be paired with an augmentation that changes the
    /// length of tokens.
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("training needs at least one epoch".into()));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::Config(format!(
                "consistency weight must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        self.optimizer.validate()?;
        if let Some(tc) = &self.text_augment {
            tc.validate()?;
        }
        if let Some(fc) = &self.feature_augment {
            fc.validate()?;
        }
        if self.loss_type == LossType::None {
            return Ok(());
        }
        if self.text_augment.is_none() && self.feature_augment.is_none() {
            return Err(Error::Config(format!(
                "loss_type={} needs a text or feature augmentation to build the sample pair",
                self.loss_type.name()
            )));
        }
        if matches!(self.loss_type, LossType::Logits | LossType::Repre) {
            if let Some(tc) = &self.text_augment {
                if !tc.method.preserves_length() {
                    return Err(Error::Config(format!(
                        "{} changes the length of tokens; {} consistency needs a \
                         length-preserving augmentation",
                        tc.method.name(),
                        self.loss_type.name()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One completed epoch: mean losses over sentences, dev span-F1 of the
/// parameters at epoch end, and wall-clock seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub l_normal: f64,
    pub l_consis: f64,
    pub dev_f1: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    pub const CSV_HEADER: &'static str = "epoch,l_normal,l_consis,dev_f1,seconds";

    /// The record the returned checkpoint was taken from: highest dev F1,
    /// earliest epoch on ties.
    pub fn best(&self) -> Option<&EpochRecord> {
        let mut best: Option<&EpochRecord> = None;
        for r in &self.records {
            if best.is_none_or(|b| r.dev_f1 > b.dev_f1) {
                best = Some(r);
            }
        }
        best
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.3}\n",
                r.epoch, r.l_normal, r.l_consis, r.dev_f1, r.seconds
            ));
        }
        out
    }
}

/// Combined objective. With loss_type=none the training loop passes
/// l_consis = 0 and this reduces to the supervised loss.
pub fn total_loss(l_normal: f64, l_consis: f64, alpha: f64) -> f64 {
    l_normal + alpha * l_consis
}

/// Supervised loss of one (possibly augmented) pair under the configured
/// emission mode, on an eval-mode forward pass. The training loop computes
/// the same objective on its own in-loop traces.
pub fn loss_aug(
    params: &ModelParams,
    hyper: &HyperConfig,
    vocab: &Vocabulary,
    s: &Sentence,
    tags: &[usize],
) -> Result<f64> {
    let trace = crate::tagger::forward_eval(params, hyper, vocab, &s.tokens)?;
    emission_nll(hyper, params, &trace.p(), tags)
}

/// Mean over tokens of KL(softmax(P_t) || softmax(P~_t)). The clean
/// distribution is the reference; gradients flow through both arguments.
pub fn loss_logits(p: &ArrayView2<f64>, p_tilde: &ArrayView2<f64>) -> Result<f64> {
    check_consistency_shapes("logits", p, p_tilde)?;
    let l = p.nrows();
    let mut sum = 0.0;
    for t in 0..l {
        let log_p = log_softmax(&p.row(t).to_vec());
        let log_q = log_softmax(&p_tilde.row(t).to_vec());
        for (lp, lq) in log_p.iter().zip(&log_q) {
            let prob = lp.exp();
            if prob > 0.0 {
                sum += prob * (lp - lq);
            }
        }
    }
    Ok(sum / l as f64)
}

/// Gradients of [`loss_logits`] w.r.t. both logit matrices.
pub fn loss_logits_backward(
    p: &ArrayView2<f64>,
    p_tilde: &ArrayView2<f64>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_consistency_shapes("logits", p, p_tilde)?;
    let l = p.nrows();
    let inv_l = 1.0 / l as f64;
    let mut d_p = Array2::zeros(p.raw_dim());
    let mut d_q = Array2::zeros(p.raw_dim());
    for t in 0..l {
        let log_p = log_softmax(&p.row(t).to_vec());
        let log_q = log_softmax(&p_tilde.row(t).to_vec());
        let probs: Vec<f64> = log_p.iter().map(|v| v.exp()).collect();
        let probs_q: Vec<f64> = log_q.iter().map(|v| v.exp()).collect();
        let kl: f64 = probs
            .iter()
            .zip(log_p.iter().zip(&log_q))
            .map(|(pr, (lp, lq))| if *pr > 0.0 { pr * (lp - lq) } else { 0.0 })
            .sum();
        for a in 0..p.ncols() {
            d_p[(t, a)] = probs[a] * (log_p[a] - log_q[a] - kl) * inv_l;
            d_q[(t, a)] = (probs_q[a] - probs[a]) * inv_l;
        }
    }
    Ok((d_p, d_q))
}

/// Mean over all L x 2h elements of the squared representation difference.
pub fn loss_repre(h: &ArrayView2<f64>, h_tilde: &ArrayView2<f64>) -> Result<f64> {
    check_consistency_shapes("repre", h, h_tilde)?;
    let n = h.len() as f64;
    let mut sum = 0.0;
    Zip::from(h).and(h_tilde).for_each(|a, b| sum += (a - b) * (a - b));
    Ok(sum / n)
}

/// Gradients of [`loss_repre`] w.r.t. both representations.
pub fn loss_repre_backward(
    h: &ArrayView2<f64>,
    h_tilde: &ArrayView2<f64>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_consistency_shapes("repre", h, h_tilde)?;
    let scale = 2.0 / h.len() as f64;
    let d_h = (h - h_tilde).mapv(|v| v * scale);
    let d_h_tilde = d_h.mapv(|v| -v);
    Ok((d_h, d_h_tilde))
}

fn check_consistency_shapes(
    which: &str,
    a: &ArrayView2<f64>,
    b: &ArrayView2<f64>,
) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Config(format!(
            "{which} consistency needs equal shapes, got {:?} vs {:?}; was a \
             length-changing augmentation configured?",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

fn log_softmax(row: &[f64]) -> Vec<f64> {
    let z = logsumexp(row);
    row.iter().map(|v| v - z).collect()
}

/// Supervised NLL under the configured emission mode.
pub fn emission_nll(
    hyper: &HyperConfig,
    params: &ModelParams,
    p: &ArrayView2<f64>,
    tags: &[usize],
) -> Result<f64> {
    match hyper.emission {
        EmissionMode::Crf => crf_nll(p, tags, &params.trans.view()),
        EmissionMode::Softmax => token_ce_nll(p, tags),
    }
}

/// NLL plus its gradients: d/dP always, d/dtrans only under the CRF head.
fn emission_backward(
    hyper: &HyperConfig,
    params: &ModelParams,
    p: &ArrayView2<f64>,
    tags: &[usize],
) -> Result<(f64, Array2<f64>, Option<Array2<f64>>)> {
    match hyper.emission {
        EmissionMode::Crf => {
            let nll = crf_nll(p, tags, &params.trans.view())?;
            let (d_p, d_trans) = crf_nll_backward(p, tags, &params.trans.view())?;
            Ok((nll, d_p, Some(d_trans)))
        }
        EmissionMode::Softmax => {
            Ok((token_ce_nll(p, tags)?, token_ce_backward(p, tags)?, None))
        }
    }
}

/// Owned augmentation resources, loaded once per training run. Lexicon
/// files named in the config are merged over the built-in tables; the
/// unigram sampler is built from the training corpus.
#[derive(Default)]
pub struct OwnedAugmentResources {
    pub homophones: Option<Lexicon>,
    pub synonyms: Option<Lexicon>,
    pub sampler: Option<UnigramSampler>,
}

impl OwnedAugmentResources {
    pub fn view(&self) -> AugmentResources<'_> {
        AugmentResources {
            homophones: self.homophones.as_ref(),
            synonyms: self.synonyms.as_ref(),
            sampler: self.sampler.as_ref(),
        }
    }
}

/// Loads what the configured text augmentation needs and nothing else.
pub fn load_augment_resources(
    cfg: Option<&TextAugmentConfig>,
    train_ds: &Dataset,
) -> Result<OwnedAugmentResources> {
    let mut res = OwnedAugmentResources::default();
    let Some(cfg) = cfg else {
        return Ok(res);
    };
    match cfg.method {
        TextAugmentMethod::CharAug | TextAugmentMethod::DeleteWord => {}
        TextAugmentMethod::InsertWord => {
            res.sampler = Some(UnigramSampler::from_datasets(&[train_ds])?);
        }
        TextAugmentMethod::SpeechAug => {
            let mut lex = Lexicon::builtin_homophones();
            if let Some(path) = &cfg.homophone_lexicon {
                lex = lex.merge(&Lexicon::parse(&fs::read_to_string(path)?)?);
            }
            res.homophones = Some(lex);
        }
        TextAugmentMethod::SubWord => {
            let mut lex = Lexicon::builtin_synonyms();
            if let Some(path) = &cfg.synonym_lexicon {
                lex = lex.merge(&Lexicon::parse(&fs::read_to_string(path)?)?);
            }
            res.synonyms = Some(lex);
        }
    }
    Ok(res)
}

/// First-order optimizer with per-tensor moment state, aligned with
/// [`ModelParams::tensors`] order.
pub struct Optimizer {
    cfg: OptimizerConfig,
    step: u64,
    m: Vec<ArrayD<f64>>,
    v: Vec<ArrayD<f64>>,
}

impl Optimizer {
    pub fn new(cfg: &OptimizerConfig, params: &ModelParams) -> Optimizer {
        let zeros: Vec<ArrayD<f64>> =
            params.tensors().iter().map(|t| ArrayD::zeros(t.raw_dim())).collect();
        Optimizer { cfg: *cfg, step: 0, m: zeros.clone(), v: zeros }
    }

    /// One update from a full gradient accumulator. Zero gradients leave
    /// parameters unchanged under both kinds.
    pub fn apply(&mut self, params: &mut ModelParams, grads: &ModelParams) {
        let lr = self.cfg.learning_rate;
        match self.cfg.kind {
            OptimizerKind::Sgd => {
                let gs = grads.tensors();
                for (mut p, g) in params.tensors_mut().into_iter().zip(gs) {
                    p.zip_mut_with(&g, |w, &gv| *w -= lr * gv);
                }
            }
            OptimizerKind::Adam => {
                self.step += 1;
                let (b1, b2, eps) = (self.cfg.beta1, self.cfg.beta2, self.cfg.eps);
                let c1 = 1.0 - b1.powf(self.step as f64);
                let c2 = 1.0 - b2.powf(self.step as f64);
                let gs = grads.tensors();
                for (i, mut p) in params.tensors_mut().into_iter().enumerate() {
                    self.m[i].zip_mut_with(&gs[i], |m, &gv| *m = b1 * *m + (1.0 - b1) * gv);
                    self.v[i].zip_mut_with(&gs[i], |v, &gv| *v = b2 * *v + (1.0 - b2) * gv * gv);
                    Zip::from(&mut p).and(&self.m[i]).and(&self.v[i]).for_each(|w, &m, &v| {
                        *w -= lr * (m / c1) / ((v / c2).sqrt() + eps);
                    });
                }
            }
        }
    }
}

// Stream indices for seed derivation; see `TrainConfig::seed`.
const STREAM_SHUFFLE: usize = 0;
const STREAM_DROPOUT: usize = 1;
const STREAM_AUGMENT: usize = 2;

struct StepContext<'a> {
    hyper: &'a HyperConfig,
    cfg: &'a TrainConfig,
    vocab: &'a Vocabulary,
    scheme: &'a LabelScheme,
    res: AugmentResources<'a>,
}

/// One sentence, both branches: returns (L_normal, L_consis, gradients of
/// the combined objective). Deterministic in (params, seeds), which is what
/// the finite-difference check of the combined gradient relies on.
///
/// The dropout stream feeds only the clean embedding; the augment stream
/// feeds, in order, the text-level draw, the augmented branch's embedding
/// dropout (only when the text level produced a new sentence), and the
/// feature-level draw.
fn train_step(
    params: &ModelParams,
    ctx: &StepContext,
    s: &Sentence,
    gold: &[usize],
    drop_seed: u64,
    aug_seed: u64,
) -> Result<(f64, f64, ModelParams)> {
    let mut grads = ModelParams::zeros_like(params);
    let mut drop_rng = ChaCha20Rng::seed_from_u64(drop_seed);
    let mut aug_rng = ChaCha20Rng::seed_from_u64(aug_seed);
    let alpha = ctx.cfg.alpha;

    // Step 1: clean branch.
    let trace = forward(params, ctx.hyper, ctx.vocab, &s.tokens, Mode::Train, Some(&mut drop_rng))?;
    let (l_normal, d_p_normal, d_trans_normal) =
        emission_backward(ctx.hyper, params, &trace.p(), gold)?;

    if ctx.cfg.loss_type == LossType::None {
        let d_e = backward_net(params, &trace.net, Some(&d_p_normal.view()), None, &mut grads);
        backward_embed(&trace.embed, &d_e.view(), &mut grads);
        if let Some(dt) = d_trans_normal {
            grads.trans += &dt;
        }
        return Ok((l_normal, 0.0, grads));
    }

    // Step 2: augmented branch. Without a text-level method the branch
    // reuses the clean embedding trace, so Adv perturbs exactly the matrix
    // whose gradient it consumed and the masking methods stack on the clean
    // dropout pattern.
    let text_pair = match &ctx.cfg.text_augment {
        Some(tc) => {
            let aligned = apply_text_augment(tc, s, &mut aug_rng, &ctx.res)?;
            let tags = ctx.scheme.encode_tags(&aligned.augmented)?;
            let tr = embed(
                params,
                ctx.hyper,
                ctx.vocab,
                &aligned.augmented.tokens,
                Mode::Train,
                Some(&mut aug_rng),
            )?;
            Some((tr, tags))
        }
        None => None,
    };
    let (embed_aug, gold_aug): (&EmbedTrace, &[usize]) = match &text_pair {
        Some((tr, tags)) => (tr, tags),
        None => (&trace.embed, gold),
    };

    let mut feat_mask: Option<Array2<f64>> = None;
    let features = match &ctx.cfg.feature_augment {
        Some(fc) => {
            // Adv consumes dL/dE of the branch's own base matrix: the clean
            // gradient from step 1 when the branches share E, a fresh
            // supervised pass when the text level changed the sentence.
            let g_adv = if fc.method == FeatureAugmentMethod::Adv {
                let mut scratch = ModelParams::zeros_like(params);
                Some(match &text_pair {
                    None => backward_net(
                        params,
                        &trace.net,
                        Some(&d_p_normal.view()),
                        None,
                        &mut scratch,
                    ),
                    Some(_) => {
                        let net = forward_on_features(params, embed_aug.e.clone());
                        let (_, d_p, _) = emission_backward(ctx.hyper, params, &net.p(), gold_aug)?;
                        backward_net(params, &net, Some(&d_p.view()), None, &mut scratch)
                    }
                })
            } else {
                None
            };
            let out = apply_feature_augment(
                fc,
                &embed_aug.e.view(),
                g_adv.as_ref().map(|g| g.view()).as_ref(),
                &mut aug_rng,
            )?;
            feat_mask = out.mask;
            out.e_aug
        }
        None => embed_aug.e.clone(),
    };
    let net_aug = forward_on_features(params, features);

    // Consistency loss plus the gradient seeds it sends into each branch.
    let mut d_p_clean_extra: Option<Array2<f64>> = None;
    let mut d_h_clean_extra: Option<Array2<f64>> = None;
    let mut d_p_aug: Option<Array2<f64>> = None;
    let mut d_h_aug: Option<Array2<f64>> = None;
    let mut d_trans_aug: Option<Array2<f64>> = None;
    let l_consis = match ctx.cfg.loss_type {
        LossType::None => unreachable!("handled above"),
        LossType::Aug => {
            let (nll, d_p, d_trans) = emission_backward(ctx.hyper, params, &net_aug.p(), gold_aug)?;
            d_p_aug = Some(d_p);
            d_trans_aug = d_trans;
            nll
        }
        LossType::Logits => {
            let val = loss_logits(&trace.p(), &net_aug.p())?;
            let (d_clean, d_aug) = loss_logits_backward(&trace.p(), &net_aug.p())?;
            d_p_clean_extra = Some(d_clean);
            d_p_aug = Some(d_aug);
            val
        }
        LossType::Repre => {
            let val = loss_repre(&trace.h(), &net_aug.h())?;
            let (d_clean, d_aug) = loss_repre_backward(&trace.h(), &net_aug.h())?;
            d_h_clean_extra = Some(d_clean);
            d_h_aug = Some(d_aug);
            val
        }
    };

    // Step 3: backpropagate the combined objective. Every consistency term
    // carries the weight alpha; at alpha = 0 those paths are skipped so the
    // update equals plain supervised training exactly.
    let mut d_p_clean = d_p_normal;
    if alpha != 0.0 {
        if let Some(extra) = &d_p_clean_extra {
            d_p_clean.zip_mut_with(extra, |a, &b| *a += alpha * b);
        }
    }
    let d_h_extra_scaled =
        if alpha != 0.0 { d_h_clean_extra.map(|m| m.mapv(|v| v * alpha)) } else { None };
    let d_e_clean = backward_net(
        params,
        &trace.net,
        Some(&d_p_clean.view()),
        d_h_extra_scaled.as_ref().map(|m| m.view()).as_ref(),
        &mut grads,
    );
    backward_embed(&trace.embed, &d_e_clean.view(), &mut grads);
    if let Some(dt) = &d_trans_normal {
        grads.trans += dt;
    }

    if alpha != 0.0 {
        let d_p_scaled = d_p_aug.map(|m| m.mapv(|v| v * alpha));
        let d_h_scaled = d_h_aug.map(|m| m.mapv(|v| v * alpha));
        let d_e_aug = backward_net(
            params,
            &net_aug,
            d_p_scaled.as_ref().map(|m| m.view()).as_ref(),
            d_h_scaled.as_ref().map(|m| m.view()).as_ref(),
            &mut grads,
        );
        // The masking methods are elementwise products, so their mask is
        // also the chain-rule factor; Adv adds a constant and passes the
        // gradient through unchanged.
        let d_base = match &feat_mask {
            Some(mask) => d_e_aug * mask,
            None => d_e_aug,
        };
        backward_embed(embed_aug, &d_base.view(), &mut grads);
        if let Some(dt) = &d_trans_aug {
            grads.trans.zip_mut_with(dt, |a, &b| *a += alpha * b);
        }
    }

    Ok((l_normal, l_consis, grads))
}

/// Tags every sentence of a dataset with the current parameters.
pub fn predict_dataset(
    params: &ModelParams,
    hyper: &HyperConfig,
    vocab: &Vocabulary,
    scheme: &LabelScheme,
    ds: &Dataset,
) -> Result<Vec<Vec<String>>> {
    ds.sentences
        .iter()
        .map(|s| predict(params, hyper, vocab, scheme, &s.tokens))
        .collect()
}

/// Span-F1 of the current parameters on a dataset.
pub fn evaluate_f1(
    params: &ModelParams,
    hyper: &HyperConfig,
    vocab: &Vocabulary,
    scheme: &LabelScheme,
    ds: &Dataset,
) -> Result<f64> {
    let preds = predict_dataset(params, hyper, vocab, scheme, ds)?;
    let (_, _, f1) = span_f1(&preds, ds)?;
    Ok(f1)
}

/// Trains a tagger from scratch and returns the best-dev-F1 checkpoint
/// (strictly better F1 replaces, so ties keep the earliest epoch) together
/// with the per-epoch log.
///
/// Per sentence and epoch: (1) clean forward and supervised loss; (2) when a
/// consistency loss is configured, build the augmented sample (text level
/// first, then feature level) and score it; (3) backpropagate the combined
/// objective and apply one optimizer step.
pub fn train(
    hyper: &HyperConfig,
    cfg: &TrainConfig,
    train_ds: &Dataset,
    dev_ds: &Dataset,
    vocab: &Vocabulary,
    scheme: &LabelScheme,
) -> Result<(ModelParams, TrainLog)> {
    hyper.validate()?;
    cfg.validate()?;
    if train_ds.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    if dev_ds.is_empty() {
        return Err(Error::Data("dev split is empty".into()));
    }
    scheme.validate(train_ds)?;
    scheme.validate(dev_ds)?;
    let gold: Vec<Vec<usize>> = train_ds
        .sentences
        .iter()
        .map(|s| scheme.encode_tags(s))
        .collect::<Result<_>>()?;
    let owned = load_augment_resources(cfg.text_augment.as_ref(), train_ds)?;
    let ctx = StepContext { hyper, cfg, vocab, scheme, res: owned.view() };

    let mut params = ModelParams::init(hyper, vocab, scheme);
    let mut opt = Optimizer::new(&cfg.optimizer, &params);
    let mut log = TrainLog::default();
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best = params.clone();

    let n = train_ds.sentences.len();
    let shuffle_base = component_seed(cfg.seed, STREAM_SHUFFLE);
    let drop_base = component_seed(cfg.seed, STREAM_DROPOUT);
    let aug_base = component_seed(cfg.seed, STREAM_AUGMENT);
    for epoch in 0..cfg.epochs {
        let t0 = Instant::now();
        let mut order: Vec<usize> = (0..n).collect();
        if cfg.shuffle {
            order.shuffle(&mut ChaCha20Rng::seed_from_u64(component_seed(shuffle_base, epoch)));
        }
        // Per-sentence seeds hang off the original index, not the shuffled
        // position, so the draws a sentence sees do not depend on where the
        // shuffle placed it.
        let drop_epoch = component_seed(drop_base, epoch);
        let aug_epoch = component_seed(aug_base, epoch);
        let mut sum_normal = 0.0;
        let mut sum_consis = 0.0;
        for &i in &order {
            let (l_n, l_c, grads) = train_step(
                &params,
                &ctx,
                &train_ds.sentences[i],
                &gold[i],
                component_seed(drop_epoch, i),
                component_seed(aug_epoch, i),
            )?;
            opt.apply(&mut params, &grads);
            sum_normal += l_n;
            sum_consis += l_c;
        }
        let dev_f1 = evaluate_f1(&params, hyper, vocab, scheme, dev_ds)?;
        log.records.push(EpochRecord {
            epoch,
            l_normal: sum_normal / n as f64,
            l_consis: sum_consis / n as f64,
            dev_f1,
            seconds: t0.elapsed().as_secs_f64(),
        });
        if dev_f1 > best_f1 {
            best_f1 = dev_f1;
            best = params.clone();
        }
    }
    Ok((best, log))
}
