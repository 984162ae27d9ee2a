//! Linear-chain CRF: partition function, path score, negative
//! log-likelihood with exact gradients, and Viterbi decoding. A per-token
//! softmax emission loss is provided as the ablation alternative.
//!
//! The transition matrix is (K+2)x(K+2); the two virtual states START = K
//! and END = K+1 never appear inside a path. Path score:
//! sum_i P[i, y_i] + trans[START, y_0] + sum_i trans[y_i, y_{i+1}]
//! + trans[y_last, END].

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::tagger::math::{logsumexp, softmax};

/// Index of the virtual start state for K tags.
pub fn start_state(k: usize) -> usize {
    k
}

/// Index of the virtual end state for K tags.
pub fn end_state(k: usize) -> usize {
    k + 1
}

fn check_trans(p: &ArrayView2<f64>, trans: &ArrayView2<f64>) -> Result<usize> {
    let k = p.ncols();
    if trans.nrows() != k + 2 || trans.ncols() != k + 2 {
        return Err(Error::shape(
            format!("transition matrix {}x{}", k + 2, k + 2),
            format!("{}x{}", trans.nrows(), trans.ncols()),
        ));
    }
    if p.nrows() == 0 {
        return Err(Error::Data("cannot score an empty sentence".into()));
    }
    Ok(k)
}

fn check_tags(tags: &[usize], l: usize, k: usize) -> Result<()> {
    if tags.len() != l {
        return Err(Error::shape(format!("{l} tags"), format!("{}", tags.len())));
    }
    if let Some(&t) = tags.iter().find(|&&t| t >= k) {
        return Err(Error::Data(format!("tag index {t} out of range for K={k}")));
    }
    Ok(())
}

/// Log of the sum of exp(score) over all K^L paths, by the forward
/// algorithm in log space.
pub fn crf_log_partition(p: &ArrayView2<f64>, trans: &ArrayView2<f64>) -> Result<f64> {
    let k = check_trans(p, trans)?;
    let alphas = forward_alphas(p, trans, k);
    let last = alphas.row(p.nrows() - 1);
    let end = end_state(k);
    let terms: Vec<f64> = (0..k).map(|j| last[j] + trans[(j, end)]).collect();
    Ok(logsumexp(&terms))
}

/// alpha[t][k] = log sum over prefixes ending in tag k at position t.
fn forward_alphas(p: &ArrayView2<f64>, trans: &ArrayView2<f64>, k: usize) -> Array2<f64> {
    let l = p.nrows();
    let start = start_state(k);
    let mut alphas = Array2::zeros((l, k));
    for j in 0..k {
        alphas[(0, j)] = trans[(start, j)] + p[(0, j)];
    }
    let mut terms = vec![0.0; k];
    for t in 1..l {
        for j in 0..k {
            for (i, term) in terms.iter_mut().enumerate() {
                *term = alphas[(t - 1, i)] + trans[(i, j)];
            }
            alphas[(t, j)] = logsumexp(&terms) + p[(t, j)];
        }
    }
    alphas
}

/// beta[t][j] = log sum over suffixes starting after tag j at position t.
fn backward_betas(p: &ArrayView2<f64>, trans: &ArrayView2<f64>, k: usize) -> Array2<f64> {
    let l = p.nrows();
    let end = end_state(k);
    let mut betas = Array2::zeros((l, k));
    for j in 0..k {
        betas[(l - 1, j)] = trans[(j, end)];
    }
    let mut terms = vec![0.0; k];
    for t in (0..l - 1).rev() {
        for j in 0..k {
            for (i, term) in terms.iter_mut().enumerate() {
                *term = trans[(j, i)] + p[(t + 1, i)] + betas[(t + 1, i)];
            }
            betas[(t, j)] = logsumexp(&terms);
        }
    }
    betas
}

/// Score of one tag path, including the virtual transitions.
pub fn crf_score(p: &ArrayView2<f64>, tags: &[usize], trans: &ArrayView2<f64>) -> Result<f64> {
    let k = check_trans(p, trans)?;
    check_tags(tags, p.nrows(), k)?;
    let mut score = trans[(start_state(k), tags[0])];
    for (t, &y) in tags.iter().enumerate() {
        score += p[(t, y)];
        if t + 1 < tags.len() {
            score += trans[(y, tags[t + 1])];
        }
    }
    score += trans[(tags[tags.len() - 1], end_state(k))];
    Ok(score)
}

/// Negative log-likelihood of the gold path: log Z - score(tags).
pub fn crf_nll(p: &ArrayView2<f64>, tags: &[usize], trans: &ArrayView2<f64>) -> Result<f64> {
    Ok(crf_log_partition(p, trans)? - crf_score(p, tags, trans)?)
}

/// Exact gradients of [`crf_nll`] w.r.t. the logits and the transition
/// matrix: marginals minus gold indicators.
pub fn crf_nll_backward(
    p: &ArrayView2<f64>,
    tags: &[usize],
    trans: &ArrayView2<f64>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let k = check_trans(p, trans)?;
    let l = p.nrows();
    check_tags(tags, l, k)?;
    let (start, end) = (start_state(k), end_state(k));
    let alphas = forward_alphas(p, trans, k);
    let betas = backward_betas(p, trans, k);
    let terms: Vec<f64> = (0..k).map(|j| alphas[(l - 1, j)] + trans[(j, end)]).collect();
    let log_z = logsumexp(&terms);

    let mut d_p = Array2::zeros((l, k));
    for t in 0..l {
        for j in 0..k {
            d_p[(t, j)] = (alphas[(t, j)] + betas[(t, j)] - log_z).exp();
        }
        d_p[(t, tags[t])] -= 1.0;
    }

    let mut d_trans = Array2::zeros((k + 2, k + 2));
    // Start and end transitions see the unary marginals of the boundary
    // positions; alpha and beta already contain those transition scores.
    for j in 0..k {
        d_trans[(start, j)] = (alphas[(0, j)] + betas[(0, j)] - log_z).exp();
        d_trans[(j, end)] = (alphas[(l - 1, j)] + trans[(j, end)] - log_z).exp();
    }
    d_trans[(start, tags[0])] -= 1.0;
    d_trans[(tags[l - 1], end)] -= 1.0;
    // Interior transitions accumulate pairwise marginals.
    for t in 0..l - 1 {
        for i in 0..k {
            for j in 0..k {
                d_trans[(i, j)] +=
                    (alphas[(t, i)] + trans[(i, j)] + p[(t + 1, j)] + betas[(t + 1, j)] - log_z)
                        .exp();
            }
        }
        d_trans[(tags[t], tags[t + 1])] -= 1.0;
    }
    Ok((d_p, d_trans))
}

/// Highest-scoring path. Ties break toward the lowest tag index at every
/// backpointer decision, so an all-zero score matrix decodes to all zeros.
pub fn viterbi(p: &ArrayView2<f64>, trans: &ArrayView2<f64>) -> Result<Vec<usize>> {
    let k = check_trans(p, trans)?;
    let l = p.nrows();
    let (start, end) = (start_state(k), end_state(k));
    let mut delta = Array2::<f64>::zeros((l, k));
    let mut back = Array2::<usize>::zeros((l, k));
    for j in 0..k {
        delta[(0, j)] = trans[(start, j)] + p[(0, j)];
    }
    for t in 1..l {
        for j in 0..k {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for i in 0..k {
                let cand = delta[(t - 1, i)] + trans[(i, j)];
                if cand > best {
                    best = cand;
                    arg = i;
                }
            }
            delta[(t, j)] = best + p[(t, j)];
            back[(t, j)] = arg;
        }
    }
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for j in 0..k {
        let cand = delta[(l - 1, j)] + trans[(j, end)];
        if cand > best {
            best = cand;
            arg = j;
        }
    }
    let mut path = vec![0; l];
    path[l - 1] = arg;
    for t in (1..l).rev() {
        path[t - 1] = back[(t, path[t])];
    }
    Ok(path)
}

/// Per-token softmax cross-entropy, summed over positions. The ablation
/// emission loss; transitions are ignored.
pub fn token_ce_nll(p: &ArrayView2<f64>, tags: &[usize]) -> Result<f64> {
    check_tags(tags, p.nrows(), p.ncols())?;
    let mut nll = 0.0;
    for (t, &y) in tags.iter().enumerate() {
        let row: Vec<f64> = p.row(t).to_vec();
        nll += logsumexp(&row) - row[y];
    }
    Ok(nll)
}

/// Gradient of [`token_ce_nll`] w.r.t. the logits.
pub fn token_ce_backward(p: &ArrayView2<f64>, tags: &[usize]) -> Result<Array2<f64>> {
    check_tags(tags, p.nrows(), p.ncols())?;
    let mut d_p = Array2::zeros(p.raw_dim());
    for (t, &y) in tags.iter().enumerate() {
        let probs = softmax(&p.row(t).to_vec());
        for (j, q) in probs.iter().enumerate() {
            d_p[(t, j)] = *q;
        }
        d_p[(t, y)] -= 1.0;
    }
    Ok(d_p)
}

/// Per-row argmax decode for the softmax emission mode; ties break low.
pub fn argmax_decode(p: &ArrayView2<f64>) -> Vec<usize> {
    (0..p.nrows())
        .map(|t| {
            let row = p.row(t);
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > best {
                    best = v;
                    arg = j;
                }
            }
            arg
        })
        .collect()
}
