//! Feature-level augmentation: four perturbations of the L x d embedded
//! matrix E. All of them preserve the matrix shape, which is what makes them
//! compatible with the logits and representation consistency losses.
//!
//! The cut and drop variants zero entries without rescaling; the perturbation
//! is the point, not an unbiased estimator. The gradient-based variant adds a
//! fixed-norm step in the direction of the loss gradient.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureAugmentMethod {
    /// Gradient-direction perturbation of fixed Frobenius norm epsilon.
    Adv,
    /// Zeroes whole rows (tokens) independently with probability `rate`.
    TokenCut,
    /// Zeroes whole columns (feature dimensions) independently.
    FeatureCut,
    /// Zeroes individual entries independently.
    Dropout,
}

impl FeatureAugmentMethod {
    pub fn name(self) -> &'static str {
        match self {
            FeatureAugmentMethod::Adv => "adv",
            FeatureAugmentMethod::TokenCut => "token_cut",
            FeatureAugmentMethod::FeatureCut => "feature_cut",
            FeatureAugmentMethod::Dropout => "dropout",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureAugmentConfig {
    pub method: FeatureAugmentMethod,
    /// Zeroing probability for the cut/drop methods.
    #[serde(default = "default_rate")]
    pub rate: f64,
    /// Step size for Adv.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_rate() -> f64 {
    0.3
}
fn default_epsilon() -> f64 {
    1.0
}

impl FeatureAugmentConfig {
    pub fn new(method: FeatureAugmentMethod, seed: u64) -> FeatureAugmentConfig {
        FeatureAugmentConfig { method, rate: default_rate(), epsilon: default_epsilon(), seed }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            FeatureAugmentMethod::Adv => {
                // NaN must fail this check as well, hence not `<= 0.0`.
                if self.epsilon.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                    return Err(Error::Config(format!(
                        "adv epsilon must be positive, got {}",
                        self.epsilon
                    )));
                }
            }
            FeatureAugmentMethod::Dropout => {
                // rate = 1 would zero everything deterministically; the drop
                // variant keeps the half-open interval.
                if !(0.0..1.0).contains(&self.rate) {
                    return Err(Error::Config(format!(
                        "dropout rate must lie in [0, 1), got {}",
                        self.rate
                    )));
                }
            }
            _ => {
                if !(0.0..=1.0).contains(&self.rate) {
                    return Err(Error::Config(format!(
                        "cut rate must lie in [0, 1], got {}",
                        self.rate
                    )));
                }
            }
        }
        Ok(())
    }
}

/// E' = E + epsilon * G / ||G||_F. A zero gradient leaves E untouched.
pub fn adv_perturb(
    e: &ArrayView2<f64>,
    g: &ArrayView2<f64>,
    epsilon: f64,
) -> Result<Array2<f64>> {
    if e.shape() != g.shape() {
        return Err(Error::shape(
            format!("{:?}", e.shape()),
            format!("gradient of shape {:?}", g.shape()),
        ));
    }
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(e.to_owned());
    }
    Ok(e + &(g.mapv(|v| v * epsilon / norm)))
}

/// Shared mask application; the mask entries are exactly 0 or 1.
fn apply_mask(e: &ArrayView2<f64>, mask: &Array2<f64>) -> Array2<f64> {
    e * mask
}

pub(crate) fn token_cut_mask<R: Rng>(shape: (usize, usize), rate: f64, rng: &mut R) -> Array2<f64> {
    let mut mask = Array2::ones(shape);
    for mut row in mask.rows_mut() {
        if rng.random_bool(rate) {
            row.fill(0.0);
        }
    }
    mask
}

pub(crate) fn feature_cut_mask<R: Rng>(
    shape: (usize, usize),
    rate: f64,
    rng: &mut R,
) -> Array2<f64> {
    let mut mask = Array2::ones(shape);
    for mut col in mask.columns_mut() {
        if rng.random_bool(rate) {
            col.fill(0.0);
        }
    }
    mask
}

pub(crate) fn dropout_mask<R: Rng>(shape: (usize, usize), rate: f64, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_fn(shape, |_| if rng.random_bool(rate) { 0.0 } else { 1.0 })
}

/// Zeroes whole token rows with probability `rate`, no rescaling.
pub fn token_cut<R: Rng>(e: &ArrayView2<f64>, rate: f64, rng: &mut R) -> Array2<f64> {
    apply_mask(e, &token_cut_mask(e.dim(), rate, rng))
}

/// Zeroes whole feature columns with probability `rate`, no rescaling.
pub fn feature_cut<R: Rng>(e: &ArrayView2<f64>, rate: f64, rng: &mut R) -> Array2<f64> {
    apply_mask(e, &feature_cut_mask(e.dim(), rate, rng))
}

/// Zeroes individual entries with probability `rate`, no rescaling.
pub fn dropout_aug<R: Rng>(e: &ArrayView2<f64>, rate: f64, rng: &mut R) -> Array2<f64> {
    apply_mask(e, &dropout_mask(e.dim(), rate, rng))
}

/// Outcome of one feature-level augmentation: the perturbed matrix, plus the
/// 0/1 mask for the masking methods. The mask is the chain-rule factor for
/// routing the augmented branch's embedding gradient back into the lookup
/// tables; Adv has no mask because its perturbation is constant w.r.t. E.
#[derive(Clone, Debug)]
pub struct FeatureAugmented {
    pub e_aug: Array2<f64>,
    pub mask: Option<Array2<f64>>,
}

/// Applies the configured method. `g` (dLoss/dE from a clean pass) is
/// required by Adv and ignored by the masking methods.
pub fn apply_feature_augment<R: Rng>(
    cfg: &FeatureAugmentConfig,
    e: &ArrayView2<f64>,
    g: Option<&ArrayView2<f64>>,
    rng: &mut R,
) -> Result<FeatureAugmented> {
    cfg.validate()?;
    match cfg.method {
        FeatureAugmentMethod::Adv => {
            let g = g.ok_or_else(|| {
                Error::Config("adv augmentation needs the clean-pass embedding gradient".into())
            })?;
            Ok(FeatureAugmented { e_aug: adv_perturb(e, g, cfg.epsilon)?, mask: None })
        }
        FeatureAugmentMethod::TokenCut => {
            let mask = token_cut_mask(e.dim(), cfg.rate, rng);
            Ok(FeatureAugmented { e_aug: apply_mask(e, &mask), mask: Some(mask) })
        }
        FeatureAugmentMethod::FeatureCut => {
            let mask = feature_cut_mask(e.dim(), cfg.rate, rng);
            Ok(FeatureAugmented { e_aug: apply_mask(e, &mask), mask: Some(mask) })
        }
        FeatureAugmentMethod::Dropout => {
            let mask = dropout_mask(e.dim(), cfg.rate, rng);
            Ok(FeatureAugmented { e_aug: apply_mask(e, &mask), mask: Some(mask) })
        }
    }
}
