//! Command-line front end. Subcommands cover the full experiment pipeline:
//! corpus generation, augmentation preview, noise-suite construction,
//! training, evaluation matrices, damage statistics, and report emission.
//!
//! Exit codes: 0 success, 1 usage, 2 data error (unreadable or malformed
//! inputs), 3 configuration error (invalid combinations, bad config files).
//! Every output file is written to a temporary sibling and renamed on
//! success, so failed runs never leave partial artifacts behind.

mod commands;
mod config;
mod util;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use slotfill_core::Error;

#[derive(Parser)]
#[command(
    name = "slotfill",
    version,
    about = "Noise-robust slot filling: corpora, augmentation, training, robustness evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

// Train carries far more flags than its siblings; the enum is parsed once,
// so the size spread is harmless and boxing would break the Args derive.
#[allow(clippy::large_enum_variant)]
#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic slot-filling corpus as three CoNLL files.
    GenCorpus(commands::GenCorpusArgs),
    /// Preview a text-level augmentation over a CoNLL file or stdin.
    Augment(commands::AugmentArgs),
    /// Build noisy evaluation sets (CoNLL plus alignment sidecar) per suite.
    Noisify(commands::NoisifyArgs),
    /// Train a tagger and write the best-dev checkpoint plus the epoch log.
    Train(commands::TrainArgs),
    /// Evaluate checkpoints over a clean set and noise suites.
    Eval(commands::EvalArgs),
    /// Compute per-suite context and slot damage rates.
    DamageStats(commands::DamageStatsArgs),
    /// Assemble a markdown report from prior eval and damage artifacts.
    Report(commands::ReportArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::GenCorpus(args) => commands::gen_corpus(args),
        Command::Augment(args) => commands::augment(args),
        Command::Noisify(args) => commands::noisify(args),
        Command::Train(args) => commands::train(args),
        Command::Eval(args) => commands::eval(args),
        Command::DamageStats(args) => commands::damage_stats(args),
        Command::Report(args) => commands::report(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(match e {
            Error::Config(_) => 3,
            _ => 2,
        });
    }
}
