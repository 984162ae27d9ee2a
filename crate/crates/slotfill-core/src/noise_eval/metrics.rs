//! Robustness metrics: span micro-F1, F1 drop under noise, the relative
//! denoising rate, and the token-level damage rates of a noise process.

use std::collections::BTreeSet;

use crate::corpus::{extract_spans, Dataset, Span, OUTSIDE};
use crate::error::{Error, Result};
use crate::noise_eval::NoisePair;

/// Micro-averaged span precision/recall/F1 over a dataset, fractions in
/// [0, 1]. A span counts as correct only on exact (start, end, type) match.
/// Two empty sides score a perfect 1; an empty side against a non-empty one
/// scores 0 for the degenerate ratio.
pub fn span_f1(preds: &[Vec<String>], gold: &Dataset) -> Result<(f64, f64, f64)> {
    if preds.len() != gold.sentences.len() {
        return Err(Error::Data(format!(
            "prediction count {} does not match dataset size {}",
            preds.len(),
            gold.sentences.len()
        )));
    }
    let mut tp = 0usize;
    let mut n_pred = 0usize;
    let mut n_gold = 0usize;
    for (pred, sent) in preds.iter().zip(&gold.sentences) {
        if pred.len() != sent.len() {
            return Err(Error::Data(format!(
                "prediction length {} does not match sentence length {}",
                pred.len(),
                sent.len()
            )));
        }
        let ps: BTreeSet<Span> = extract_spans(pred).into_iter().collect();
        let gs: BTreeSet<Span> = extract_spans(&sent.tags).into_iter().collect();
        tp += ps.intersection(&gs).count();
        n_pred += ps.len();
        n_gold += gs.len();
    }
    if n_pred == 0 && n_gold == 0 {
        return Ok((1.0, 1.0, 1.0));
    }
    let p = if n_pred == 0 { 0.0 } else { tp as f64 / n_pred as f64 };
    let r = if n_gold == 0 { 0.0 } else { tp as f64 / n_gold as f64 };
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    Ok((p, r, f1))
}

/// F1 drop under noise; callers keep one scale (the reports use percent).
pub fn delta_f1(f1_clean: f64, f1_noise: f64) -> f64 {
    f1_clean - f1_noise
}

/// Relative denoising rate: how much of the baseline's noise-induced F1 drop
/// a method recovers. None when the baseline did not drop at all.
pub fn rho(f1_method_noise: f64, f1_baseline_noise: f64, delta_f1_baseline: f64) -> Option<f64> {
    if delta_f1_baseline == 0.0 {
        None
    } else {
        Some((f1_method_noise - f1_baseline_noise) / delta_f1_baseline)
    }
}

/// The literal delta-ratio composition (Delta_method - Delta_baseline) /
/// Delta_baseline. With equal clean scores this is exactly -rho; it is
/// reported as an alternate reading, not the headline number.
pub fn rho_literal(delta_f1_method: f64, delta_f1_baseline: f64) -> Option<f64> {
    if delta_f1_baseline == 0.0 {
        None
    } else {
        Some((delta_f1_method - delta_f1_baseline) / delta_f1_baseline)
    }
}

/// Token-level damage rates of a noise process: (D_CS over context tokens,
/// D_SEM over slot tokens). A clean token is "unchanged" when some aligned
/// noisy token has the identical surface form. A rate is None when its token
/// population is empty.
pub fn damage_rates(
    clean: &Dataset,
    pairs: &[NoisePair],
) -> Result<(Option<f64>, Option<f64>)> {
    let mut slot_total = 0usize;
    let mut slot_kept = 0usize;
    let mut ctx_total = 0usize;
    let mut ctx_kept = 0usize;
    for pair in pairs {
        let sent = clean.sentences.get(pair.original_index).ok_or_else(|| {
            Error::Data(format!(
                "noise pair references sentence {} outside the clean set",
                pair.original_index
            ))
        })?;
        if pair.alignment.len() != pair.noisy.len() {
            return Err(Error::Data("noise pair alignment length mismatch".into()));
        }
        let mut unchanged = vec![false; sent.len()];
        for (t, a) in pair.alignment.iter().enumerate() {
            if let Some(j) = *a {
                if j >= sent.len() {
                    return Err(Error::Data("alignment index outside clean sentence".into()));
                }
                if pair.noisy.tokens[t] == sent.tokens[j] {
                    unchanged[j] = true;
                }
            }
        }
        for (j, tag) in sent.tags.iter().enumerate() {
            if tag == OUTSIDE {
                ctx_total += 1;
                ctx_kept += unchanged[j] as usize;
            } else {
                slot_total += 1;
                slot_kept += unchanged[j] as usize;
            }
        }
    }
    let rate = |total: usize, kept: usize| {
        (total > 0).then(|| (total - kept) as f64 / total as f64)
    };
    Ok((rate(ctx_total, ctx_kept), rate(slot_total, slot_kept)))
}

/// Longest-common-subsequence token alignment for externally supplied noisy
/// data with no generation-time alignment. Exact surface equality only.
pub fn lcs_alignment(clean: &[String], noisy: &[String]) -> Vec<Option<usize>> {
    let n = clean.len();
    let m = noisy.len();
    let mut dp = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            dp[i][j] = if clean[i] == noisy[j] {
                dp[i + 1][j + 1] + 1
            } else {
                dp[i + 1][j].max(dp[i][j + 1])
            };
        }
    }
    let mut out = vec![None; m];
    let (mut i, mut j) = (0usize, 0usize);
    while i < n && j < m {
        if clean[i] == noisy[j] && dp[i][j] == dp[i + 1][j + 1] + 1 {
            out[j] = Some(i);
            i += 1;
            j += 1;
        } else if dp[i + 1][j] >= dp[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// One row of the robustness matrix for a noise suite. F1 fields are
/// percentages; `r` is the method-minus-baseline noisy-F1 difference whose
/// ratio to the baseline drop gives `rho`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub suite: String,
    pub f1_clean: f64,
    pub f1_noise: f64,
    pub delta_f1: f64,
    pub r: Option<f64>,
    pub rho: Option<f64>,
    pub rho_lit: Option<f64>,
    pub d_cs: Option<f64>,
    pub d_sem: Option<f64>,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "suite,f1_clean,f1_noise,delta_f1,r,rho,d_cs,d_sem";

    /// Builds the baseline-free part of a row from percent F1 scores.
    pub fn new(suite: impl Into<String>, f1_clean: f64, f1_noise: f64) -> MetricsReport {
        MetricsReport {
            suite: suite.into(),
            f1_clean,
            f1_noise,
            delta_f1: delta_f1(f1_clean, f1_noise),
            r: None,
            rho: None,
            rho_lit: None,
            d_cs: None,
            d_sem: None,
        }
    }

    /// Fills the baseline-relative columns from the matching baseline row.
    pub fn with_baseline(mut self, baseline: &MetricsReport) -> MetricsReport {
        self.r = Some(self.f1_noise - baseline.f1_noise);
        self.rho = rho(self.f1_noise, baseline.f1_noise, baseline.delta_f1);
        self.rho_lit = rho_literal(self.delta_f1, baseline.delta_f1);
        self
    }

    pub fn with_damage(mut self, d_cs: Option<f64>, d_sem: Option<f64>) -> MetricsReport {
        self.d_cs = d_cs;
        self.d_sem = d_sem;
        self
    }

    /// One CSV row under [`Self::CSV_HEADER`]; absent values print empty.
    /// The alternate rho reading is a markdown-only column.
    pub fn csv_row(&self) -> String {
        let opt1 = |v: Option<f64>| v.map(|x| format!("{x:.1}")).unwrap_or_default();
        let opt3 = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_default();
        format!(
            "{},{:.1},{:.1},{:.1},{},{},{},{}",
            self.suite,
            self.f1_clean,
            self.f1_noise,
            self.delta_f1,
            opt1(self.r),
            opt3(self.rho),
            opt3(self.d_cs),
            opt3(self.d_sem),
        )
    }

    pub fn to_csv(reports: &[MetricsReport]) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for report in reports {
            out.push_str(&report.csv_row());
            out.push('\n');
        }
        out
    }

    /// Markdown robustness table, including the alternate literal-rho column.
    pub fn markdown_table(reports: &[MetricsReport]) -> String {
        let mut out = String::new();
        out.push_str(
            "| suite | F1 clean | F1 noise | dF1 | r | rho | rho (literal) | D_CS | D_SEM |\n",
        );
        out.push_str("|---|---|---|---|---|---|---|---|---|\n");
        let opt1 = |v: Option<f64>| v.map(|x| format!("{x:+.1}")).unwrap_or_else(|| "-".into());
        let pct = |v: Option<f64>| {
            v.map(|x| format!("{:.1}%", x * 100.0)).unwrap_or_else(|| "-".into())
        };
        for rep in reports {
            out.push_str(&format!(
                "| {} | {:.1} | {:.1} | {:.1} | {} | {} | {} | {} | {} |\n",
                rep.suite,
                rep.f1_clean,
                rep.f1_noise,
                rep.delta_f1,
                opt1(rep.r),
                pct(rep.rho),
                pct(rep.rho_lit),
                pct(rep.d_cs),
                pct(rep.d_sem),
            ));
        }
        out
    }
}
