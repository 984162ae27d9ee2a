//! Finite-difference oracles for the hand-derived backward pass.
//!
//! Every parameter group is checked against central differences (step 1e-5)
//! at group level: rel = ||fd - an|| / max(||fd|| + ||an||, 1e-8) must stay
//! below 1e-5. The gradient w.r.t. the embedded matrix E gets the same
//! treatment. No autodiff anywhere: the oracle is the loss function itself.

use ndarray::{Array2, ArrayD, IxDyn};
use slotfill_core::corpus::{build_vocab, Dataset, Sentence, Split};
use slotfill_core::tagger::{
    backward, crf_nll, crf_nll_backward, forward_eval, forward_on_features, token_ce_backward,
    token_ce_nll,
};
use slotfill_core::{HyperConfig, LabelScheme, ModelParams, Vocabulary};

const STEP: f64 = 1e-5;
const TOL: f64 = 1e-5;

fn toks(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

fn fixture() -> (HyperConfig, Vocabulary, LabelScheme, ModelParams, Vec<String>, Vec<usize>) {
    let sents = vec![
        Sentence::new(
            toks(&["book", "a", "cheap", "hotel"]),
            toks(&["O", "O", "B-price", "B-kind"]),
        )
        .unwrap(),
        Sentence::new(toks(&["find", "hotel"]), toks(&["O", "B-kind"])).unwrap(),
    ];
    let ds = Dataset { name: "fd".into(), split: Split::Train, sentences: sents };
    let vocab = build_vocab(&[&ds], 1).unwrap();
    let scheme = LabelScheme::from_slot_types(["price".to_string(), "kind".to_string()]);
    let hyper = HyperConfig {
        word_dim: 5,
        char_dim: 3,
        hidden_dim: 4,
        dropout: 0.0,
        seed: 42,
        ..Default::default()
    };
    let mut params = ModelParams::init(&hyper, &vocab, &scheme);
    // Nonzero transitions so their gradient path is exercised away from the
    // all-zero stationary point.
    for (i, v) in params.trans.iter_mut().enumerate() {
        *v = ((i as f64) * 0.37).sin() * 0.4;
    }
    let tokens = toks(&["book", "a", "cheap", "hotel"]);
    let gold = scheme.encode_tags(&ds.sentences[0]).unwrap();
    (hyper, vocab, scheme, params, tokens, gold)
}

fn group_rel_err(fd: &ArrayD<f64>, an: &ndarray::ArrayViewD<f64>) -> f64 {
    let diff: f64 = fd.iter().zip(an.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let nf: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
    let na: f64 = an.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / (nf + na).max(1e-8)
}

/// Central-difference gradient of `loss` for one tensor group.
fn fd_group<F>(params: &ModelParams, group: usize, loss: &mut F) -> ArrayD<f64>
where
    F: FnMut(&ModelParams) -> f64,
{
    let shape = params.tensors()[group].shape().to_vec();
    let mut fd = ArrayD::<f64>::zeros(IxDyn(&shape));
    for idx in ndarray::indices(IxDyn(&shape)) {
        let mut plus = params.clone();
        plus.tensors_mut()[group][&idx] += STEP;
        let mut minus = params.clone();
        minus.tensors_mut()[group][&idx] -= STEP;
        fd[&idx] = (loss(&plus) - loss(&minus)) / (2.0 * STEP);
    }
    fd
}

/// Checks the analytic gradient of every parameter group against central
/// differences for one (loss, analytic-backward) pair.
fn check_all_groups<F, G>(params: &ModelParams, mut loss: F, analytic: G)
where
    F: FnMut(&ModelParams) -> f64,
    G: Fn(&ModelParams) -> ModelParams,
{
    let grads = analytic(params);
    for group in 0..slotfill_core::tagger::PARAM_GROUPS.len() {
        let fd = fd_group(params, group, &mut loss);
        let an = grads.tensors()[group].to_owned();
        let rel = group_rel_err(&fd, &an.view());
        assert!(
            rel < TOL,
            "group {} rel err {rel:.3e} (fd norm {:.3e}, an norm {:.3e})",
            slotfill_core::tagger::PARAM_GROUPS[group],
            fd.iter().map(|v| v * v).sum::<f64>().sqrt(),
            an.iter().map(|v| v * v).sum::<f64>().sqrt(),
        );
    }
}

#[test]
fn crf_nll_gradients_match_central_differences() {
    let (hyper, vocab, _, params, tokens, gold) = fixture();
    let loss = |p: &ModelParams| {
        let tr = forward_eval(p, &hyper, &vocab, &tokens).unwrap();
        crf_nll(&tr.p(), &gold, &p.trans.view()).unwrap()
    };
    let analytic = |p: &ModelParams| {
        let tr = forward_eval(p, &hyper, &vocab, &tokens).unwrap();
        let (d_p, d_trans) = crf_nll_backward(&tr.p(), &gold, &p.trans.view()).unwrap();
        let mut grads = p.zeros_like();
        backward(p, &tr, &d_p.view(), &mut grads);
        grads.trans += &d_trans;
        grads
    };
    check_all_groups(&params, loss, analytic);
}

#[test]
fn token_ce_gradients_match_central_differences() {
    let (hyper, vocab, _, params, tokens, gold) = fixture();
    let loss = |p: &ModelParams| {
        let tr = forward_eval(p, &hyper, &vocab, &tokens).unwrap();
        token_ce_nll(&tr.p(), &gold).unwrap()
    };
    let analytic = |p: &ModelParams| {
        let tr = forward_eval(p, &hyper, &vocab, &tokens).unwrap();
        let d_p = token_ce_backward(&tr.p(), &gold).unwrap();
        let mut grads = p.zeros_like();
        backward(p, &tr, &d_p.view(), &mut grads);
        grads
    };
    check_all_groups(&params, loss, analytic);
}

#[test]
fn embedding_matrix_gradient_matches_central_differences() {
    let (hyper, vocab, _, params, tokens, gold) = fixture();
    let e = forward_eval(&params, &hyper, &vocab, &tokens).unwrap().e().to_owned();
    let loss_at = |features: &Array2<f64>| {
        let net = forward_on_features(&params, features.clone());
        crf_nll(&net.p(), &gold, &params.trans.view()).unwrap()
    };
    // Analytic dLoss/dE from the full backward pass on the unperturbed trace.
    let tr = forward_eval(&params, &hyper, &vocab, &tokens).unwrap();
    let (d_p, _) = crf_nll_backward(&tr.p(), &gold, &params.trans.view()).unwrap();
    let mut grads = params.zeros_like();
    let d_e = backward(&params, &tr, &d_p.view(), &mut grads);

    let mut fd = Array2::<f64>::zeros(e.raw_dim());
    for i in 0..e.nrows() {
        for j in 0..e.ncols() {
            let mut plus = e.clone();
            plus[(i, j)] += STEP;
            let mut minus = e.clone();
            minus[(i, j)] -= STEP;
            fd[(i, j)] = (loss_at(&plus) - loss_at(&minus)) / (2.0 * STEP);
        }
    }
    let rel = group_rel_err(&fd.into_dyn(), &d_e.view().into_dyn());
    assert!(rel < TOL, "dLoss/dE rel err {rel:.3e}");
}

#[test]
fn word_and_char_tables_only_touched_rows_get_gradient() {
    let (hyper, vocab, _, params, tokens, gold) = fixture();
    let tr = forward_eval(&params, &hyper, &vocab, &tokens).unwrap();
    let (d_p, _) = crf_nll_backward(&tr.p(), &gold, &params.trans.view()).unwrap();
    let mut grads = params.zeros_like();
    backward(&params, &tr, &d_p.view(), &mut grads);
    let used: std::collections::BTreeSet<usize> =
        tokens.iter().map(|t| vocab.word_id(t)).collect();
    for row in 0..grads.word_emb.nrows() {
        let nonzero = grads.word_emb.row(row).iter().any(|&v| v != 0.0);
        assert_eq!(nonzero, used.contains(&row), "word row {row}");
    }
}
