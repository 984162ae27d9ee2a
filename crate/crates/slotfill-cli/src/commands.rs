//! The seven subcommand implementations. Each resolves its inputs (flags
//! over config file over environment), validates configuration before
//! touching data, and writes outputs atomically.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use slotfill_core::corpus::{build_vocab, generate_synthetic_corpus, write_conll};
use slotfill_core::noise_eval::{
    apply_noise, component_seed, damage_rates, lcs_alignment, parse_alignment_sidecar,
    pairs_to_dataset, write_alignment_sidecar, NoisePair, NoiseResources,
};
use slotfill_core::text_augment::apply_text_augment;
use slotfill_core::training::{
    evaluate_f1, load_augment_resources, train as run_training, OptimizerKind, TrainLog,
};
use slotfill_core::{
    Checkpoint, Dataset, EmissionMode, Error, FeatureAugmentConfig, FeatureAugmentMethod,
    LabelScheme, Lexicon, LossType, MetricsReport, NoiseKind, NoiseSpec, Result, Split,
    TextAugmentConfig, TextAugmentMethod,
};

use crate::config::ExperimentConfig;
use crate::util::{
    parse_emission, parse_feature_method, parse_loss_type, parse_noise_kind,
    parse_optimizer_kind, parse_text_method, read_dataset, read_text, suite_stem, write_atomic,
};

#[derive(Args)]
pub struct GenCorpusArgs {
    /// Corpus seed; identical seeds reproduce identical files.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Training split size.
    #[arg(long = "train", default_value_t = 2000)]
    n_train: usize,
    /// Dev split size.
    #[arg(long = "dev", default_value_t = 300)]
    n_dev: usize,
    /// Test split size.
    #[arg(long = "test", default_value_t = 300)]
    n_test: usize,
    /// Output directory for train.conll, dev.conll, test.conll.
    #[arg(long, short, env = "SLOTFILL_OUT_DIR")]
    out: PathBuf,
}

pub fn gen_corpus(args: GenCorpusArgs) -> Result<()> {
    let (train, dev, test) =
        generate_synthetic_corpus(args.seed, args.n_train, args.n_dev, args.n_test)?;
    for (ds, file) in [(&train, "train.conll"), (&dev, "dev.conll"), (&test, "test.conll")] {
        let path = args.out.join(file);
        write_atomic(&path, &write_conll(ds))?;
        println!("wrote {} ({} sentences)", path.display(), ds.len());
    }
    Ok(())
}

#[derive(Args)]
pub struct AugmentArgs {
    /// CoNLL input file, or `-` for stdin.
    #[arg(long, short)]
    input: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Text-level method: char_aug, delete_word, insert_word, speech_aug, sub_word.
    #[arg(long, value_parser = parse_text_method)]
    method: TextAugmentMethod,
    /// Transform probability; defaults to the method's own default.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Extra homophone lexicon, merged over the built-in table.
    #[arg(long)]
    homophone_lexicon: Option<PathBuf>,
    /// Extra synonym lexicon, merged over the built-in table.
    #[arg(long)]
    synonym_lexicon: Option<PathBuf>,
}

pub fn augment(args: AugmentArgs) -> Result<()> {
    let ds = read_dataset(&args.input, Split::Train)?;
    let mut cfg = TextAugmentConfig::new(args.method, args.seed);
    if let Some(p) = args.p {
        cfg.p = p;
    }
    cfg.homophone_lexicon = args.homophone_lexicon;
    cfg.synonym_lexicon = args.synonym_lexicon;
    cfg.validate()?;
    // The unigram sampler for insertions is built from the input itself.
    let owned = load_augment_resources(Some(&cfg), &ds)?;
    let res = owned.view();
    let mut sentences = Vec::with_capacity(ds.len());
    for (i, s) in ds.sentences.iter().enumerate() {
        let mut rng = ChaCha20Rng::seed_from_u64(component_seed(cfg.seed, i));
        sentences.push(apply_text_augment(&cfg, s, &mut rng, &res)?.augmented);
    }
    let out_ds = Dataset::new("augmented", ds.split, sentences);
    let text = write_conll(&out_ds);
    match &args.output {
        Some(path) => {
            write_atomic(path, &text)?;
            println!("wrote {} ({} sentences)", path.display(), out_ds.len());
        }
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Args)]
pub struct NoisifyArgs {
    /// Clean CoNLL test file.
    #[arg(long, short)]
    input: PathBuf,
    /// Output directory; one .conll plus .align pair per suite.
    #[arg(long, short, env = "SLOTFILL_OUT_DIR")]
    out: PathBuf,
    /// Noise suite, repeatable. Single kinds by name (typos, keyboard,
    /// spelling_error, homophone, synonym_swap, append_irr, concat_sent,
    /// simplify) or composites as mixed:a+b+c.
    #[arg(long = "suite", required = true, value_parser = parse_noise_kind)]
    suites: Vec<NoiseKind>,
    #[arg(long, default_value_t = 0.3)]
    intensity: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Extra homophone lexicon, merged over the built-in table.
    #[arg(long)]
    homophone_lexicon: Option<PathBuf>,
    /// Extra synonym lexicon, merged over the built-in table.
    #[arg(long)]
    synonym_lexicon: Option<PathBuf>,
}

fn load_lexicon(builtin: Lexicon, extra: Option<&PathBuf>) -> Result<Lexicon> {
    match extra {
        Some(path) => Ok(builtin.merge(&Lexicon::parse(&read_text(path)?)?)),
        None => Ok(builtin),
    }
}

pub fn noisify(args: NoisifyArgs) -> Result<()> {
    let ds = read_dataset(&args.input, Split::Test)?;
    let homophones = load_lexicon(Lexicon::builtin_homophones(), args.homophone_lexicon.as_ref())?;
    let synonyms = load_lexicon(Lexicon::builtin_synonyms(), args.synonym_lexicon.as_ref())?;
    let res = NoiseResources { homophones: Some(&homophones), synonyms: Some(&synonyms) };
    for kind in &args.suites {
        let spec = NoiseSpec { kind: kind.clone(), intensity: args.intensity, seed: args.seed };
        let pairs = apply_noise(&ds, &spec, &res)?;
        let stem = suite_stem(kind);
        let noisy = pairs_to_dataset(&stem, Split::Test, &pairs);
        write_atomic(&args.out.join(format!("{stem}.conll")), &write_conll(&noisy))?;
        write_atomic(&args.out.join(format!("{stem}.align")), &write_alignment_sidecar(&pairs))?;
        println!("wrote {}/{stem}.conll (+.align, {} sentences)", args.out.display(), noisy.len());
    }
    Ok(())
}

#[derive(Args)]
pub struct TrainArgs {
    /// Experiment config file (TOML); flags override file values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Named method variant from the config's [[methods]] list.
    #[arg(long)]
    method: Option<String>,
    /// Output name; defaults to the method name, then to "model".
    #[arg(long)]
    name: Option<String>,
    /// Training CoNLL file.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Dev CoNLL file.
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long, short, env = "SLOTFILL_OUT_DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Consistency weight alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Consistency objective: none, aug, logits, repre.
    #[arg(long, value_parser = parse_loss_type)]
    loss_type: Option<LossType>,
    /// Text-level augmentation method.
    #[arg(long = "text-aug", value_parser = parse_text_method)]
    text_aug: Option<TextAugmentMethod>,
    /// Transform probability for the text-level method.
    #[arg(long = "text-aug-p")]
    text_aug_p: Option<f64>,
    /// Feature-level augmentation method: adv, token_cut, feature_cut, dropout.
    #[arg(long = "feature-aug", value_parser = parse_feature_method)]
    feature_aug: Option<FeatureAugmentMethod>,
    /// Rate for the feature-level masking methods.
    #[arg(long = "feature-rate")]
    feature_rate: Option<f64>,
    /// Perturbation norm for the adv feature method.
    #[arg(long = "feature-epsilon")]
    feature_epsilon: Option<f64>,
    /// Training seed (shuffling, dropout, augmentation draws).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "no-shuffle")]
    no_shuffle: bool,
    /// Optimizer kind: adam, sgd.
    #[arg(long, value_parser = parse_optimizer_kind)]
    optimizer: Option<OptimizerKind>,
    #[arg(long = "learning-rate")]
    learning_rate: Option<f64>,
    #[arg(long = "word-dim")]
    word_dim: Option<usize>,
    #[arg(long = "char-dim")]
    char_dim: Option<usize>,
    #[arg(long = "hidden-dim")]
    hidden_dim: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    /// Emission head: crf, softmax.
    #[arg(long, value_parser = parse_emission)]
    emission: Option<EmissionMode>,
    /// Parameter initialization seed.
    #[arg(long = "init-seed")]
    init_seed: Option<u64>,
    /// Vocabulary frequency cutoff.
    #[arg(long = "min-count")]
    min_count: Option<usize>,
    /// Extra homophone lexicon for speech_aug.
    #[arg(long)]
    homophone_lexicon: Option<PathBuf>,
    /// Extra synonym lexicon for sub_word.
    #[arg(long)]
    synonym_lexicon: Option<PathBuf>,
}

pub fn train(args: TrainArgs) -> Result<()> {
    let exp = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let mut cfg = match &args.method {
        Some(name) => exp.method(name)?.apply(&exp.train),
        None => exp.train.clone(),
    };
    let mut hyper = exp.hyper.clone();
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = args.loss_type {
        cfg.loss_type = v;
    }
    if let Some(method) = args.text_aug {
        let mut tc = TextAugmentConfig::new(method, 0);
        if let Some(existing) = &cfg.text_augment {
            tc.homophone_lexicon = existing.homophone_lexicon.clone();
            tc.synonym_lexicon = existing.synonym_lexicon.clone();
            if existing.method == method {
                tc.p = existing.p;
            }
        }
        cfg.text_augment = Some(tc);
    }
    if let Some(p) = args.text_aug_p {
        match &mut cfg.text_augment {
            Some(tc) => tc.p = p,
            None => {
                return Err(Error::Config("--text-aug-p given without a text augmentation".into()))
            }
        }
    }
    if let Some(method) = args.feature_aug {
        let mut fc = FeatureAugmentConfig::new(method, 0);
        if let Some(existing) = &cfg.feature_augment {
            if existing.method == method {
                fc.rate = existing.rate;
                fc.epsilon = existing.epsilon;
            }
        }
        cfg.feature_augment = Some(fc);
    }
    if let Some(rate) = args.feature_rate {
        match &mut cfg.feature_augment {
            Some(fc) => fc.rate = rate,
            None => {
                return Err(Error::Config("--feature-rate given without a feature augmentation".into()))
            }
        }
    }
    if let Some(eps) = args.feature_epsilon {
        match &mut cfg.feature_augment {
            Some(fc) => fc.epsilon = eps,
            None => {
                return Err(Error::Config(
                    "--feature-epsilon given without a feature augmentation".into(),
                ))
            }
        }
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if args.no_shuffle {
        cfg.shuffle = false;
    }
    if let Some(v) = args.optimizer {
        cfg.optimizer.kind = v;
    }
    if let Some(v) = args.learning_rate {
        cfg.optimizer.learning_rate = v;
    }
    if let Some(v) = args.word_dim {
        hyper.word_dim = v;
    }
    if let Some(v) = args.char_dim {
        hyper.char_dim = v;
    }
    if let Some(v) = args.hidden_dim {
        hyper.hidden_dim = v;
    }
    if let Some(v) = args.dropout {
        hyper.dropout = v;
    }
    if let Some(v) = args.emission {
        hyper.emission = v;
    }
    if let Some(v) = args.init_seed {
        hyper.seed = v;
    }
    if let Some(tc) = &mut cfg.text_augment {
        if tc.homophone_lexicon.is_none() {
            tc.homophone_lexicon =
                args.homophone_lexicon.clone().or_else(|| exp.paths.homophone_lexicon.clone());
        }
        if tc.synonym_lexicon.is_none() {
            tc.synonym_lexicon =
                args.synonym_lexicon.clone().or_else(|| exp.paths.synonym_lexicon.clone());
        }
    }
    // The combination gate runs before any data is read.
    hyper.validate()?;
    cfg.validate()?;

    let name = args
        .name
        .clone()
        .or_else(|| args.method.clone())
        .unwrap_or_else(|| "model".to_string());
    let out_dir = args.out.clone().or_else(|| exp.paths.out_dir.clone()).ok_or_else(|| {
        Error::Config("no output directory: pass --out, set SLOTFILL_OUT_DIR, or [paths].out_dir".into())
    })?;
    let train_path = args.train.clone().or_else(|| exp.paths.train.clone()).ok_or_else(|| {
        Error::Config("no training data: pass --train or set [paths].train".into())
    })?;
    let dev_path = args.dev.clone().or_else(|| exp.paths.dev.clone()).ok_or_else(|| {
        Error::Config("no dev data: pass --dev or set [paths].dev".into())
    })?;

    let train_ds = read_dataset(&train_path, Split::Train)?;
    let dev_ds = read_dataset(&dev_path, Split::Dev)?;
    let vocab = build_vocab(&[&train_ds], args.min_count.unwrap_or(exp.min_count))?;
    let scheme = LabelScheme::from_datasets(&[&train_ds])?;
    let started = Instant::now();
    let (params, log) = run_training(&hyper, &cfg, &train_ds, &dev_ds, &vocab, &scheme)?;
    let checkpoint = Checkpoint::new(hyper, vocab, scheme, params)?;
    let ckpt_path = out_dir.join(format!("checkpoint_{name}.json"));
    write_atomic(&ckpt_path, &checkpoint.to_json()?)?;
    write_atomic(&out_dir.join(format!("trainlog_{name}.csv")), &log.to_csv())?;
    let best = log.best().expect("at least one epoch");
    println!(
        "trained {name}: best dev F1 {:.1}% at epoch {} of {} ({:.1}s); wrote {}",
        best.dev_f1 * 100.0,
        best.epoch,
        log.records.len(),
        started.elapsed().as_secs_f64(),
        ckpt_path.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct EvalArgs {
    /// Checkpoint to evaluate as NAME=PATH (repeatable). A bare PATH names
    /// the method after the file stem.
    #[arg(long = "checkpoint", required = true)]
    checkpoints: Vec<String>,
    /// Method name whose scores anchor the R and rho columns.
    #[arg(long)]
    baseline: Option<String>,
    /// Clean CoNLL test file.
    #[arg(long)]
    test: PathBuf,
    /// Directory holding <suite>.conll (+.align) files from noisify.
    #[arg(long = "noisy-dir")]
    noisy_dir: PathBuf,
    /// Suite to evaluate, repeatable; must match the noisify suite list.
    #[arg(long = "suite", required = true, value_parser = parse_noise_kind)]
    suites: Vec<NoiseKind>,
    #[arg(long, short, env = "SLOTFILL_OUT_DIR")]
    out: PathBuf,
}

fn checkpoint_spec(spec: &str) -> (String, PathBuf) {
    if let Some((name, path)) = spec.split_once('=') {
        return (name.to_string(), PathBuf::from(path));
    }
    let stem = Path::new(spec)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| spec.to_string());
    let name = stem.strip_prefix("checkpoint_").unwrap_or(&stem).to_string();
    (name, PathBuf::from(spec))
}

struct SuiteData {
    name: String,
    ds: Dataset,
    d_cs: Option<f64>,
    d_sem: Option<f64>,
}

fn read_suite(clean: &Dataset, noisy_dir: &Path, kind: &NoiseKind) -> Result<SuiteData> {
    let stem = suite_stem(kind);
    let ds = read_dataset(&noisy_dir.join(format!("{stem}.conll")), Split::Test)?;
    if ds.len() != clean.len() {
        return Err(Error::Data(format!(
            "suite {}: {} sentences against {} clean sentences",
            kind.name(),
            ds.len(),
            clean.len()
        )));
    }
    let align_path = noisy_dir.join(format!("{stem}.align"));
    let (d_cs, d_sem) = if align_path.is_file() {
        let alignment = parse_alignment_sidecar(&read_text(&align_path)?)?;
        if alignment.len() != ds.len() {
            return Err(Error::Data(format!(
                "{}: {} alignment rows against {} sentences",
                align_path.display(),
                alignment.len(),
                ds.len()
            )));
        }
        let pairs: Vec<NoisePair> = ds
            .sentences
            .iter()
            .zip(alignment)
            .enumerate()
            .map(|(i, (s, a))| NoisePair { original_index: i, noisy: s.clone(), alignment: a })
            .collect();
        damage_rates(clean, &pairs)?
    } else {
        (None, None)
    };
    Ok(SuiteData { name: kind.name(), ds, d_cs, d_sem })
}

/// The evaluation matrix: one row per method, one F1 (rho) column per
/// suite, plus the across-suite average.
fn render_matrix(rows: &[(String, Vec<MetricsReport>)]) -> String {
    let suites: Vec<&str> = rows
        .first()
        .map(|(_, rs)| rs.iter().map(|r| r.suite.as_str()).collect())
        .unwrap_or_default();
    let mut md = String::from("| method | clean F1 |");
    for s in &suites {
        md.push_str(&format!(" {s} |"));
    }
    md.push_str(" overall |\n|---|---|");
    md.push_str(&"---|".repeat(suites.len() + 1));
    md.push('\n');
    for (name, reports) in rows {
        let clean = reports.first().map_or(f64::NAN, |r| r.f1_clean);
        md.push_str(&format!("| {name} | {clean:.1} |"));
        for r in reports {
            md.push_str(&format!(" {} |", matrix_cell(r.f1_noise, r.rho)));
        }
        let mean_f1 = reports.iter().map(|r| r.f1_noise).sum::<f64>() / reports.len() as f64;
        let rhos: Vec<f64> = reports.iter().filter_map(|r| r.rho).collect();
        let mean_rho = if rhos.len() == reports.len() {
            Some(rhos.iter().sum::<f64>() / rhos.len() as f64)
        } else {
            None
        };
        md.push_str(&format!(" {} |\n", matrix_cell(mean_f1, mean_rho)));
    }
    md
}

fn matrix_cell(f1: f64, rho: Option<f64>) -> String {
    match rho {
        Some(rho) => format!("{f1:.1} ({:.1}%)", rho * 100.0),
        None => format!("{f1:.1}"),
    }
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let mut methods: Vec<(String, Checkpoint)> = Vec::new();
    for spec in &args.checkpoints {
        let (name, path) = checkpoint_spec(spec);
        if methods.iter().any(|(n, _)| *n == name) {
            return Err(Error::Config(format!("duplicate method name {name:?}")));
        }
        let ckpt = Checkpoint::load(&path)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        methods.push((name, ckpt));
    }
    if let Some(b) = &args.baseline {
        if !methods.iter().any(|(n, _)| n == b) {
            return Err(Error::Config(format!(
                "baseline {b:?} is not among the evaluated checkpoints"
            )));
        }
    }
    let clean = read_dataset(&args.test, Split::Test)?;
    let suite_data: Vec<SuiteData> = args
        .suites
        .iter()
        .map(|kind| read_suite(&clean, &args.noisy_dir, kind))
        .collect::<Result<_>>()?;

    let mut rows: Vec<(String, Vec<MetricsReport>)> = Vec::new();
    for (name, ckpt) in &methods {
        let f1_clean =
            evaluate_f1(&ckpt.params, &ckpt.hyper, &ckpt.vocab, &ckpt.scheme, &clean)? * 100.0;
        let mut reports = Vec::with_capacity(suite_data.len());
        for sd in &suite_data {
            let f1_noise =
                evaluate_f1(&ckpt.params, &ckpt.hyper, &ckpt.vocab, &ckpt.scheme, &sd.ds)? * 100.0;
            reports.push(
                MetricsReport::new(&sd.name, f1_clean, f1_noise).with_damage(sd.d_cs, sd.d_sem),
            );
        }
        rows.push((name.clone(), reports));
    }
    if let Some(bname) = &args.baseline {
        let baseline_rows =
            rows.iter().find(|(n, _)| n == bname).map(|(_, rs)| rs.clone()).expect("checked");
        for (_, reports) in &mut rows {
            for (r, b) in reports.iter_mut().zip(&baseline_rows) {
                *r = r.clone().with_baseline(b);
            }
        }
    }

    for (name, reports) in &rows {
        write_atomic(&args.out.join(format!("metrics_{name}.csv")), &MetricsReport::to_csv(reports))?;
    }
    let mut combined = format!("method,{}\n", MetricsReport::CSV_HEADER);
    for (name, reports) in &rows {
        for r in reports {
            combined.push_str(&format!("{name},{}\n", r.csv_row()));
        }
    }
    write_atomic(&args.out.join("eval.csv"), &combined)?;

    let matrix = render_matrix(&rows);
    let mut md = String::from("# Evaluation\n\n## Robustness matrix\n\n");
    md.push_str(&matrix);
    for (name, reports) in &rows {
        md.push_str(&format!("\n## {name}\n\n"));
        md.push_str(&MetricsReport::markdown_table(reports));
    }
    write_atomic(&args.out.join("eval.md"), &md)?;
    print!("{matrix}");
    println!("wrote eval.csv, eval.md, and {} metrics files to {}", rows.len(), args.out.display());
    Ok(())
}

#[derive(Args)]
pub struct DamageStatsArgs {
    /// Clean CoNLL test file.
    #[arg(long)]
    clean: PathBuf,
    /// Directory holding <suite>.conll (+.align) files from noisify.
    #[arg(long = "noisy-dir")]
    noisy_dir: PathBuf,
    /// Suite to measure, repeatable.
    #[arg(long = "suite", required = true, value_parser = parse_noise_kind)]
    suites: Vec<NoiseKind>,
    /// Output CSV file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Fail on a missing .align sidecar instead of realigning by LCS.
    #[arg(long = "no-lcs-fallback")]
    no_lcs_fallback: bool,
}

pub fn damage_stats(args: DamageStatsArgs) -> Result<()> {
    let clean = read_dataset(&args.clean, Split::Test)?;
    let mut csv = String::from("suite,d_cs,d_sem\n");
    for kind in &args.suites {
        let stem = suite_stem(kind);
        let ds = read_dataset(&args.noisy_dir.join(format!("{stem}.conll")), Split::Test)?;
        if ds.len() != clean.len() {
            return Err(Error::Data(format!(
                "suite {}: {} sentences against {} clean sentences",
                kind.name(),
                ds.len(),
                clean.len()
            )));
        }
        let align_path = args.noisy_dir.join(format!("{stem}.align"));
        let alignment: Vec<Vec<Option<usize>>> = if align_path.is_file() {
            parse_alignment_sidecar(&read_text(&align_path)?)?
        } else if args.no_lcs_fallback {
            return Err(Error::Data(format!(
                "suite {}: no alignment sidecar and the LCS fallback is disabled",
                kind.name()
            )));
        } else {
            ds.sentences
                .iter()
                .enumerate()
                .map(|(i, s)| lcs_alignment(&clean.sentences[i].tokens, &s.tokens))
                .collect()
        };
        if alignment.len() != ds.len() {
            return Err(Error::Data(format!(
                "{}: {} alignment rows against {} sentences",
                align_path.display(),
                alignment.len(),
                ds.len()
            )));
        }
        let pairs: Vec<NoisePair> = ds
            .sentences
            .iter()
            .zip(alignment)
            .enumerate()
            .map(|(i, (s, a))| NoisePair { original_index: i, noisy: s.clone(), alignment: a })
            .collect();
        let (d_cs, d_sem) = damage_rates(&clean, &pairs)?;
        csv.push_str(&format!("{},{},{}\n", kind.name(), fmt_pct(d_cs), fmt_pct(d_sem)));
    }
    match &args.out {
        Some(path) => {
            write_atomic(path, &csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

/// Damage rates print as percentages with one decimal; an undefined rate
/// (empty population) prints as an empty field.
fn fmt_pct(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{:.1}", v * 100.0),
        None => String::new(),
    }
}

#[derive(Args)]
pub struct ReportArgs {
    /// Directory with eval.csv and optional damage_stats.csv, trainlog_*.csv.
    #[arg(long, short, env = "SLOTFILL_OUT_DIR")]
    dir: PathBuf,
    /// Output file; defaults to <dir>/report.md.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn parse_combined_csv(text: &str) -> Result<Vec<(String, Vec<MetricsReport>)>> {
    let mut lines = text.lines();
    let expected = format!("method,{}", MetricsReport::CSV_HEADER);
    match lines.next() {
        Some(h) if h == expected => {}
        other => {
            return Err(Error::Data(format!(
                "eval.csv: expected header {expected:?}, got {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut rows: Vec<(String, Vec<MetricsReport>)> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Data(format!(
                "eval.csv line {}: expected 9 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Data(format!("eval.csv line {}: bad number {s:?}", lineno + 2)))
        };
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s).map(Some)
            }
        };
        let report = MetricsReport {
            suite: fields[1].to_string(),
            f1_clean: num(fields[2])?,
            f1_noise: num(fields[3])?,
            delta_f1: num(fields[4])?,
            r: opt(fields[5])?,
            rho: opt(fields[6])?,
            rho_lit: None,
            d_cs: opt(fields[7])?,
            d_sem: opt(fields[8])?,
        };
        match rows.iter_mut().find(|(n, _)| n == fields[0]) {
            Some((_, rs)) => rs.push(report),
            None => rows.push((fields[0].to_string(), vec![report])),
        }
    }
    Ok(rows)
}

pub fn report(args: ReportArgs) -> Result<()> {
    let eval_path = args.dir.join("eval.csv");
    if !eval_path.is_file() {
        return Err(Error::Data(format!(
            "{}: not found (run eval into this directory first)",
            eval_path.display()
        )));
    }
    let rows = parse_combined_csv(&read_text(&eval_path)?)?;
    let mut md = String::from("# Robustness report\n\n## Evaluation matrix\n\n");
    md.push_str(&render_matrix(&rows));

    let damage_path = args.dir.join("damage_stats.csv");
    if damage_path.is_file() {
        md.push_str("\n## Noise damage\n\n| suite | D_CS | D_SEM |\n|---|---|---|\n");
        for line in read_text(&damage_path)?.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Data(format!("{}: bad row {line:?}", damage_path.display())));
            }
            let cell = |s: &str| if s.is_empty() { "-".to_string() } else { format!("{s}%") };
            md.push_str(&format!("| {} | {} | {} |\n", fields[0], cell(fields[1]), cell(fields[2])));
        }
    }

    let mut log_entries: Vec<(String, TrainLog)> = Vec::new();
    let mut names: Vec<PathBuf> = std::fs::read_dir(&args.dir)
        .map_err(|e| Error::Data(format!("{}: {e}", args.dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("trainlog_") && n.ends_with(".csv"))
        })
        .collect();
    names.sort();
    for path in names {
        let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
        let name = stem.strip_prefix("trainlog_").unwrap_or(&stem).to_string();
        log_entries.push((name, parse_train_log(&read_text(&path)?, &path)?));
    }
    if !log_entries.is_empty() {
        md.push_str("\n## Training\n\n| method | epochs | best dev F1 | at epoch |\n|---|---|---|---|\n");
        for (name, log) in &log_entries {
            let best = log.best().expect("non-empty log");
            md.push_str(&format!(
                "| {name} | {} | {:.1}% | {} |\n",
                log.records.len(),
                best.dev_f1 * 100.0,
                best.epoch
            ));
        }
    }

    let out_path = args.out.clone().unwrap_or_else(|| args.dir.join("report.md"));
    write_atomic(&out_path, &md)?;
    println!("wrote {}", out_path.display());
    Ok(())
}

fn parse_train_log(text: &str, path: &Path) -> Result<TrainLog> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TrainLog::CSV_HEADER => {}
        other => {
            return Err(Error::Data(format!(
                "{}: expected header {:?}, got {:?}",
                path.display(),
                TrainLog::CSV_HEADER,
                other.unwrap_or("")
            )))
        }
    }
    let mut log = TrainLog::default();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Data(format!(
                "{}: line {}: expected 5 fields",
                path.display(),
                lineno + 2
            )));
        }
        let bad =
            |f: &str| Error::Data(format!("{}: line {}: bad value {f:?}", path.display(), lineno + 2));
        log.records.push(slotfill_core::training::EpochRecord {
            epoch: fields[0].parse().map_err(|_| bad(fields[0]))?,
            l_normal: fields[1].parse().map_err(|_| bad(fields[1]))?,
            l_consis: fields[2].parse().map_err(|_| bad(fields[2]))?,
            dev_f1: fields[3].parse().map_err(|_| bad(fields[3]))?,
            seconds: fields[4].parse().map_err(|_| bad(fields[4]))?,
        });
    }
    if log.records.is_empty() {
        return Err(Error::Data(format!("{}: no epoch records", path.display())));
    }
    Ok(log)
}
