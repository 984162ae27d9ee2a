//! Noise-robust slot filling at desk scale.
//!
//! The crate covers the full loop of a consistency-training study on BIO
//! slot filling: a deterministic synthetic corpus, text-level and
//! feature-level augmentation, an Embedder-BiLSTM-CRF tagger with
//! hand-derived gradients in double precision, joint training with
//! consistency objectives, rule-based noise suites, and robustness metrics
//! (span F1, delta-F1, resilience ratio, damage rates).
//!
//! All randomness flows through caller-seeded ChaCha20 generators; every
//! operation is deterministic given its inputs and seeds.

pub mod corpus;
pub mod error;
pub mod feature_augment;
pub mod noise_eval;
pub mod tagger;
pub mod text_augment;
pub mod training;

pub use corpus::{Dataset, LabelScheme, Sentence, Span, Split, Vocabulary};
pub use noise_eval::{MetricsReport, NoiseKind, NoisePair, NoiseSpec};
pub use error::{Error, Result};
pub use tagger::{Checkpoint, EmissionMode, ForwardTrace, HyperConfig, Mode, ModelParams};
pub use feature_augment::{FeatureAugmentConfig, FeatureAugmentMethod};
pub use text_augment::{AlignedSentence, Lexicon, TextAugmentConfig, TextAugmentMethod};
pub use training::{EpochRecord, LossType, OptimizerConfig, OptimizerKind, TrainConfig, TrainLog};





