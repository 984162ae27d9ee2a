//! Shared plumbing: atomic file writes, CoNLL IO with path context, flag
//! parsers for core enums, and suite file naming.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use slotfill_core::corpus::parse_conll;
use slotfill_core::tagger::EmissionMode;
use slotfill_core::training::OptimizerKind;
use slotfill_core::{
    Dataset, Error, FeatureAugmentMethod, LossType, NoiseKind, Result, Split, TextAugmentMethod,
};

/// Reads a file, or stdin when the path is `-`.
pub fn read_text(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Error::Data(format!("stdin: {e}")))?;
        return Ok(buf);
    }
    fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

/// Parses a CoNLL file; warnings go to stderr, since they do not invalidate
/// the data under the chunk-repair scoring convention.
pub fn read_dataset(path: &Path, split: Split) -> Result<Dataset> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".to_string());
    let (ds, warnings) = parse_conll(&read_text(path)?, &name, split)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    for w in &warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(ds)
}

/// Writes via a temporary sibling plus rename, so a failure never leaves a
/// partial file at the target path.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent)
        .map_err(|e| Error::Data(format!("{}: {e}", parent.display())))?;
    let tmp = tempfile::NamedTempFile::new_in(&parent)
        .map_err(|e| Error::Data(format!("{}: {e}", parent.display())))?;
    fs::write(tmp.path(), contents).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// File stem for a suite's outputs; mixed-kind names are flattened to stay
/// filesystem-friendly (`mixed:a+b` -> `mixed_a_b`).
pub fn suite_stem(kind: &NoiseKind) -> String {
    kind.name().replace([':', '+'], "_")
}

fn enum_parse_error(what: &str, got: &str, valid: &[&str]) -> String {
    format!("unknown {what} {got:?}; expected one of: {}", valid.join(", "))
}

pub fn parse_text_method(s: &str) -> std::result::Result<TextAugmentMethod, String> {
    match s {
        "char_aug" => Ok(TextAugmentMethod::CharAug),
        "delete_word" => Ok(TextAugmentMethod::DeleteWord),
        "insert_word" => Ok(TextAugmentMethod::InsertWord),
        "speech_aug" => Ok(TextAugmentMethod::SpeechAug),
        "sub_word" => Ok(TextAugmentMethod::SubWord),
        other => Err(enum_parse_error(
            "text augmentation",
            other,
            &["char_aug", "delete_word", "insert_word", "speech_aug", "sub_word"],
        )),
    }
}

pub fn parse_feature_method(s: &str) -> std::result::Result<FeatureAugmentMethod, String> {
    match s {
        "adv" => Ok(FeatureAugmentMethod::Adv),
        "token_cut" => Ok(FeatureAugmentMethod::TokenCut),
        "feature_cut" => Ok(FeatureAugmentMethod::FeatureCut),
        "dropout" => Ok(FeatureAugmentMethod::Dropout),
        other => Err(enum_parse_error(
            "feature augmentation",
            other,
            &["adv", "token_cut", "feature_cut", "dropout"],
        )),
    }
}

pub fn parse_loss_type(s: &str) -> std::result::Result<LossType, String> {
    match s {
        "none" => Ok(LossType::None),
        "aug" => Ok(LossType::Aug),
        "logits" => Ok(LossType::Logits),
        "repre" => Ok(LossType::Repre),
        other => Err(enum_parse_error("loss type", other, &["none", "aug", "logits", "repre"])),
    }
}

pub fn parse_emission(s: &str) -> std::result::Result<EmissionMode, String> {
    match s {
        "crf" => Ok(EmissionMode::Crf),
        "softmax" => Ok(EmissionMode::Softmax),
        other => Err(enum_parse_error("emission mode", other, &["crf", "softmax"])),
    }
}

pub fn parse_optimizer_kind(s: &str) -> std::result::Result<OptimizerKind, String> {
    match s {
        "adam" => Ok(OptimizerKind::Adam),
        "sgd" => Ok(OptimizerKind::Sgd),
        other => Err(enum_parse_error("optimizer", other, &["adam", "sgd"])),
    }
}

pub fn parse_noise_kind(s: &str) -> std::result::Result<NoiseKind, String> {
    s.parse::<NoiseKind>().map_err(|e| e.to_string())
}
