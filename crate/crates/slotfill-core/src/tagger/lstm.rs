//! Bidirectional LSTM encoder: forward recurrences with full activation
//! caches and the matching hand-derived backward pass.
//!
//! Gate packing order inside the 4h axis is [input, forget, cell, output].
//! Per-direction recurrence from zero initial state:
//!   a_t = W x_t + U h_{t-1} + b
//!   i,f,o = sigmoid of their slices, g = tanh of its slice
//!   c_t = f * c_{t-1} + i * g,  h_t = o * tanh(c_t)

use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use crate::tagger::math::sigmoid;
use crate::tagger::{LstmCellParams, ModelParams};

/// Per-direction activation cache, all L x h, indexed by processing step
/// (step 0 is the sentence start for the forward direction and the sentence
/// end for the backward one).
#[derive(Clone, Debug)]
pub(crate) struct DirTrace {
    pub i: Array2<f64>,
    pub f: Array2<f64>,
    pub g: Array2<f64>,
    pub o: Array2<f64>,
    pub c: Array2<f64>,
    pub tanh_c: Array2<f64>,
    pub h: Array2<f64>,
}

/// Encoder cache: the matrix the LSTM consumed plus both direction traces
/// and the assembled hidden matrix H (L x 2h, forward half first).
#[derive(Clone, Debug)]
pub(crate) struct EncodeTrace {
    pub x: Array2<f64>,
    pub fwd: DirTrace,
    pub bwd: DirTrace,
    pub h: Array2<f64>,
}

#[inline]
fn step_to_pos(step: usize, len: usize, reverse: bool) -> usize {
    if reverse {
        len - 1 - step
    } else {
        step
    }
}

fn run_direction(cell: &LstmCellParams, x: &ArrayView2<f64>, reverse: bool) -> DirTrace {
    let l = x.nrows();
    let h = cell.u.ncols();
    // The input transform has no recurrence; one matrix product covers all
    // steps. Rows stay in sentence order here.
    let xw = x.dot(&cell.w.t());
    let mut tr = DirTrace {
        i: Array2::zeros((l, h)),
        f: Array2::zeros((l, h)),
        g: Array2::zeros((l, h)),
        o: Array2::zeros((l, h)),
        c: Array2::zeros((l, h)),
        tanh_c: Array2::zeros((l, h)),
        h: Array2::zeros((l, h)),
    };
    let mut h_prev = Array1::<f64>::zeros(h);
    let mut c_prev = Array1::<f64>::zeros(h);
    for step in 0..l {
        let pos = step_to_pos(step, l, reverse);
        let a = &xw.row(pos) + &cell.u.dot(&h_prev) + &cell.b;
        for j in 0..h {
            let i_g = sigmoid(a[j]);
            let f_g = sigmoid(a[h + j]);
            let g_g = a[2 * h + j].tanh();
            let o_g = sigmoid(a[3 * h + j]);
            let c = f_g * c_prev[j] + i_g * g_g;
            let tc = c.tanh();
            tr.i[(step, j)] = i_g;
            tr.f[(step, j)] = f_g;
            tr.g[(step, j)] = g_g;
            tr.o[(step, j)] = o_g;
            tr.c[(step, j)] = c;
            tr.tanh_c[(step, j)] = tc;
            tr.h[(step, j)] = o_g * tc;
        }
        h_prev.assign(&tr.h.row(step));
        c_prev.assign(&tr.c.row(step));
    }
    tr
}

/// Runs both directions and assembles H. Takes ownership of the input
/// matrix so the cache records exactly what the encoder consumed.
pub(crate) fn encode_with_trace(params: &ModelParams, x: Array2<f64>) -> EncodeTrace {
    let l = x.nrows();
    let h = params.hidden_dim();
    let fwd = run_direction(&params.fwd, &x.view(), false);
    let bwd = run_direction(&params.bwd, &x.view(), true);
    let mut hid = Array2::zeros((l, 2 * h));
    for pos in 0..l {
        hid.slice_mut(s![pos, 0..h]).assign(&fwd.h.row(pos));
        hid.slice_mut(s![pos, h..2 * h]).assign(&bwd.h.row(l - 1 - pos));
    }
    EncodeTrace { x, fwd, bwd, h: hid }
}

/// Backpropagates one direction. `d_h_seq` is the loss gradient w.r.t. this
/// direction's hidden states in sentence order; parameter gradients
/// accumulate into `grads`, input gradients into `d_x` (sentence order).
fn backward_direction(
    cell: &LstmCellParams,
    x: &ArrayView2<f64>,
    tr: &DirTrace,
    d_h_seq: &ArrayView2<f64>,
    reverse: bool,
    grads: &mut LstmCellParams,
    d_x: &mut Array2<f64>,
) {
    let l = x.nrows();
    let h = cell.u.ncols();
    let mut d_a = Array2::<f64>::zeros((l, 4 * h));
    let mut dh_carry = Array1::<f64>::zeros(h);
    let mut dc_carry = Array1::<f64>::zeros(h);
    for step in (0..l).rev() {
        let pos = step_to_pos(step, l, reverse);
        for j in 0..h {
            let dh = d_h_seq[(pos, j)] + dh_carry[j];
            let (i_g, f_g, g_g, o_g) =
                (tr.i[(step, j)], tr.f[(step, j)], tr.g[(step, j)], tr.o[(step, j)]);
            let tc = tr.tanh_c[(step, j)];
            let d_o = dh * tc;
            let dc = dc_carry[j] + dh * o_g * (1.0 - tc * tc);
            let d_i = dc * g_g;
            let d_g = dc * i_g;
            let c_prev = if step > 0 { tr.c[(step - 1, j)] } else { 0.0 };
            let d_f = dc * c_prev;
            dc_carry[j] = dc * f_g;
            d_a[(step, j)] = d_i * i_g * (1.0 - i_g);
            d_a[(step, h + j)] = d_f * f_g * (1.0 - f_g);
            d_a[(step, 2 * h + j)] = d_g * (1.0 - g_g * g_g);
            d_a[(step, 3 * h + j)] = d_o * o_g * (1.0 - o_g);
        }
        dh_carry = d_a.row(step).dot(&cell.u);
    }
    // Batched parameter accumulation over all steps. Inputs and previous
    // hidden states are materialized in processing order first.
    let mut x_proc = Array2::<f64>::zeros((l, x.ncols()));
    let mut h_prev = Array2::<f64>::zeros((l, h));
    for step in 0..l {
        x_proc.row_mut(step).assign(&x.row(step_to_pos(step, l, reverse)));
        if step > 0 {
            h_prev.row_mut(step).assign(&tr.h.row(step - 1));
        }
    }
    grads.w += &d_a.t().dot(&x_proc);
    grads.u += &d_a.t().dot(&h_prev);
    grads.b += &d_a.sum_axis(Axis(0));
    let d_x_proc = d_a.dot(&cell.w);
    for step in 0..l {
        let pos = step_to_pos(step, l, reverse);
        let mut row = d_x.row_mut(pos);
        row += &d_x_proc.row(step);
    }
}

/// Backpropagates the whole encoder: splits the hidden gradient into its
/// directional halves and returns nothing; gradients accumulate in place.
pub(crate) fn backward_encode(
    params: &ModelParams,
    tr: &EncodeTrace,
    d_h: &ArrayView2<f64>,
    grads: &mut ModelParams,
    d_x: &mut Array2<f64>,
) {
    let h = params.hidden_dim();
    // Both halves stay in sentence order; the per-direction driver maps
    // sentence positions to processing steps itself.
    let d_fwd = d_h.slice(s![.., 0..h]);
    let d_bwd = d_h.slice(s![.., h..2 * h]);
    backward_direction(&params.fwd, &tr.x.view(), &tr.fwd, &d_fwd, false, &mut grads.fwd, d_x);
    backward_direction(&params.bwd, &tr.x.view(), &tr.bwd, &d_bwd, true, &mut grads.bwd, d_x);
}
