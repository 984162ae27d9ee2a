//! End-to-end subcommand tests against the built binary: pipeline
//! determinism, exit-code contract, and the fixture oracles for damage
//! statistics.

use std::path::Path;
use std::process::{Command, Output};

fn slotfill(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slotfill"))
        .args(args)
        .current_dir(dir)
        .env_remove("SLOTFILL_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// gen-corpus plus a small baseline training run shared by several tests.
fn build_pipeline(dir: &Path) {
    assert_ok(&slotfill(
        &["gen-corpus", "--seed", "11", "--train", "60", "--dev", "20", "--test", "20", "--out", "data"],
        dir,
    ));
    assert_ok(&slotfill(
        &[
            "noisify", "--input", "data/test.conll", "--out", "noisy", "--seed", "5",
            "--suite", "typos", "--suite", "append_irr",
        ],
        dir,
    ));
    assert_ok(&slotfill(
        &[
            "train", "--train", "data/train.conll", "--dev", "data/dev.conll", "--out", "runs",
            "--name", "baseline", "--epochs", "12", "--seed", "3", "--word-dim", "10",
            "--char-dim", "4", "--hidden-dim", "10", "--learning-rate", "0.01",
        ],
        dir,
    ));
}

#[test]
fn gen_corpus_is_deterministic_and_parses_back() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let args =
        ["gen-corpus", "--seed", "7", "--train", "40", "--dev", "10", "--test", "10", "--out", "a"];
    assert_ok(&slotfill(&args, dir));
    let mut again = args;
    again[args.len() - 1] = "b";
    assert_ok(&slotfill(&again, dir));
    for file in ["train.conll", "dev.conll", "test.conll"] {
        assert_eq!(read(&dir.join("a").join(file)), read(&dir.join("b").join(file)), "{file}");
    }
    // Round trip through the augment command with p = 0 checks that the
    // generated files parse without warnings and rewrite byte-identically.
    let out = slotfill(
        &["augment", "--input", "a/test.conll", "--method", "char_aug", "--p", "0"],
        dir,
    );
    assert_ok(&out);
    assert!(out.stderr.is_empty(), "no parse warnings expected");
    assert_eq!(String::from_utf8_lossy(&out.stdout), read(&dir.join("a/test.conll")));
}

#[test]
fn noisify_writes_one_pair_per_suite_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_ok(&slotfill(
        &["gen-corpus", "--seed", "1", "--train", "30", "--dev", "10", "--test", "12", "--out", "data"],
        dir,
    ));
    let suites = [
        "typos",
        "keyboard",
        "spelling_error",
        "homophone",
        "synonym_swap",
        "append_irr",
        "simplify",
    ];
    let mut args = vec!["noisify", "--input", "data/test.conll", "--out", "n1", "--seed", "9"];
    for s in &suites {
        args.push("--suite");
        args.push(s);
    }
    assert_ok(&slotfill(&args, dir));
    let count = std::fs::read_dir(dir.join("n1")).unwrap().count();
    assert_eq!(count, suites.len() * 2, "one .conll plus one .align per suite");
    let mut rerun = args.clone();
    rerun[4] = "n2";
    assert_ok(&slotfill(&rerun, dir));
    for s in &suites {
        for ext in ["conll", "align"] {
            let f = format!("{s}.{ext}");
            assert_eq!(read(&dir.join("n1").join(&f)), read(&dir.join("n2").join(&f)), "{f}");
        }
    }
}

#[test]
fn mixed_suite_files_are_written_under_a_flattened_name() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_ok(&slotfill(
        &["gen-corpus", "--seed", "2", "--train", "30", "--dev", "10", "--test", "10", "--out", "data"],
        dir,
    ));
    assert_ok(&slotfill(
        &[
            "noisify", "--input", "data/test.conll", "--out", "noisy",
            "--suite", "mixed:typos+synonym_swap+append_irr",
        ],
        dir,
    ));
    assert!(dir.join("noisy/mixed_typos_synonym_swap_append_irr.conll").is_file());
    assert!(dir.join("noisy/mixed_typos_synonym_swap_append_irr.align").is_file());
}

#[test]
fn length_gate_rejects_before_training_with_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // No data files exist; the gate must fire before any input is read.
    let out = slotfill(&["train", "--loss-type", "logits", "--text-aug", "delete_word"], dir);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("length"), "diagnostic cites the length change: {stderr}");
}

#[test]
fn train_same_seed_twice_writes_identical_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_ok(&slotfill(
        &["gen-corpus", "--seed", "4", "--train", "40", "--dev", "12", "--test", "12", "--out", "data"],
        dir,
    ));
    let args = [
        "train", "--train", "data/train.conll", "--dev", "data/dev.conll", "--out", "r1",
        "--epochs", "2", "--seed", "8", "--word-dim", "8", "--char-dim", "4", "--hidden-dim", "8",
    ];
    assert_ok(&slotfill(&args, dir));
    let mut again = args;
    again[6] = "r2";
    assert_ok(&slotfill(&again, dir));
    assert_eq!(
        read(&dir.join("r1/checkpoint_model.json")),
        read(&dir.join("r2/checkpoint_model.json"))
    );
    // Logs agree on everything except wall-clock.
    let strip_time = |csv: String| -> Vec<String> {
        csv.lines()
            .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default())
            .collect()
    };
    assert_eq!(
        strip_time(read(&dir.join("r1/trainlog_model.csv"))),
        strip_time(read(&dir.join("r2/trainlog_model.csv")))
    );
}

#[test]
fn eval_reports_zero_rho_against_itself_and_reruns_byte_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    build_pipeline(dir);
    let args = [
        "eval", "--checkpoint", "baseline=runs/checkpoint_baseline.json", "--baseline", "baseline",
        "--test", "data/test.conll", "--noisy-dir", "noisy", "--suite", "typos",
        "--suite", "append_irr", "--out", "eval1",
    ];
    assert_ok(&slotfill(&args, dir));
    let csv = read(&dir.join("eval1/metrics_baseline.csv"));
    assert!(csv.starts_with("suite,f1_clean,f1_noise,delta_f1,r,rho,d_cs,d_sem\n"));
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let f1_clean: f64 = fields[1].parse().unwrap();
        assert!(f1_clean > 0.0, "degenerate model: {line}");
        assert_eq!(fields[4], "0.0", "R against itself is zero: {line}");
        assert_eq!(fields[5], "0.000", "rho against itself is zero: {line}");
    }
    // append_irr never touches slot tokens, so its semantic damage is zero.
    let combined = read(&dir.join("eval1/eval.csv"));
    let append_row = combined
        .lines()
        .find(|l| l.contains(",append_irr,"))
        .expect("append_irr row present");
    assert!(append_row.ends_with(",0.000"), "D_SEM zero for append_irr: {append_row}");
    let mut rerun = args;
    rerun[rerun.len() - 1] = "eval2";
    assert_ok(&slotfill(&rerun, dir));
    for f in ["metrics_baseline.csv", "eval.csv", "eval.md"] {
        assert_eq!(read(&dir.join("eval1").join(f)), read(&dir.join("eval2").join(f)), "{f}");
    }
}

#[test]
fn eval_requires_the_baseline_to_be_among_the_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    build_pipeline(dir);
    let out = slotfill(
        &[
            "eval", "--checkpoint", "baseline=runs/checkpoint_baseline.json", "--baseline",
            "missing", "--test", "data/test.conll", "--noisy-dir", "noisy", "--suite", "typos",
            "--out", "eval",
        ],
        dir,
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn damage_stats_reproduces_the_hand_counted_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // One sentence, one slot token and one context token; the noise edits
    // the slot token only: D_CS = 0/1, D_SEM = 1/2 substituted... the slot
    // population is the two B/I tokens, one of which changed.
    std::fs::create_dir_all(dir.join("noisy")).unwrap();
    std::fs::write(
        dir.join("clean.conll"),
        "book\tO\na\tO\ncheap\tB-price\nhotel\tB-kind\n\n",
    )
    .unwrap();
    std::fs::write(
        dir.join("noisy/typos.conll"),
        "book\tO\na\tO\ncheep\tB-price\nhotel\tB-kind\n\n",
    )
    .unwrap();
    std::fs::write(dir.join("noisy/typos.align"), "0 1 2 3\n").unwrap();
    let out = slotfill(
        &["damage-stats", "--clean", "clean.conll", "--noisy-dir", "noisy", "--suite", "typos"],
        dir,
    );
    assert_ok(&out);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "suite,d_cs,d_sem\ntypos,0.0,50.0\n");

    // Without the sidecar the LCS fallback reconstructs the same alignment.
    std::fs::remove_file(dir.join("noisy/typos.align")).unwrap();
    let fallback = slotfill(
        &["damage-stats", "--clean", "clean.conll", "--noisy-dir", "noisy", "--suite", "typos"],
        dir,
    );
    assert_ok(&fallback);
    assert_eq!(String::from_utf8_lossy(&fallback.stdout), "suite,d_cs,d_sem\ntypos,0.0,50.0\n");
    let refused = slotfill(
        &[
            "damage-stats", "--clean", "clean.conll", "--noisy-dir", "noisy", "--suite", "typos",
            "--no-lcs-fallback",
        ],
        dir,
    );
    assert_eq!(refused.status.code(), Some(2));
}

#[test]
fn identity_noise_yields_zero_damage() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::create_dir_all(dir.join("noisy")).unwrap();
    let conll = "find\tO\nfancy\tB-price\nhotel\tB-kind\n\n";
    std::fs::write(dir.join("clean.conll"), conll).unwrap();
    std::fs::write(dir.join("noisy/typos.conll"), conll).unwrap();
    std::fs::write(dir.join("noisy/typos.align"), "0 1 2\n").unwrap();
    let out = slotfill(
        &["damage-stats", "--clean", "clean.conll", "--noisy-dir", "noisy", "--suite", "typos"],
        dir,
    );
    assert_ok(&out);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "suite,d_cs,d_sem\ntypos,0.0,0.0\n");
}

#[test]
fn report_combines_eval_damage_and_training_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    build_pipeline(dir);
    assert_ok(&slotfill(
        &[
            "eval", "--checkpoint", "baseline=runs/checkpoint_baseline.json", "--baseline",
            "baseline", "--test", "data/test.conll", "--noisy-dir", "noisy", "--suite", "typos",
            "--suite", "append_irr", "--out", "runs",
        ],
        dir,
    ));
    assert_ok(&slotfill(
        &[
            "damage-stats", "--clean", "data/test.conll", "--noisy-dir", "noisy", "--suite",
            "typos", "--suite", "append_irr", "--out", "runs/damage_stats.csv",
        ],
        dir,
    ));
    assert_ok(&slotfill(&["report", "--dir", "runs"], dir));
    let md = read(&dir.join("runs/report.md"));
    assert!(md.contains("## Evaluation matrix"));
    assert!(md.contains("| method | clean F1 |"));
    assert!(md.contains("## Noise damage"));
    assert!(md.contains("## Training"));
    assert!(md.contains("| baseline |"));
}

#[test]
fn usage_and_data_errors_use_distinct_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // Unknown flag: usage error.
    let usage = slotfill(&["gen-corpus", "--nope"], dir);
    assert_eq!(usage.status.code(), Some(1));
    // Missing required --out (no env var set): usage error.
    let missing_out = slotfill(&["gen-corpus", "--seed", "1"], dir);
    assert_eq!(missing_out.status.code(), Some(1));
    // Unreadable input: data error.
    let data = slotfill(
        &["augment", "--input", "absent.conll", "--method", "char_aug"],
        dir,
    );
    assert_eq!(data.status.code(), Some(2));
    // Malformed config file: configuration error.
    std::fs::write(dir.join("bad.toml"), "[train]\nepochs = \"many\"\n").unwrap();
    let config = slotfill(&["train", "--config", "bad.toml"], dir);
    assert_eq!(config.status.code(), Some(3));
    // Help exits zero.
    let help = slotfill(&["--help"], dir);
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn out_dir_env_var_supplies_the_default_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = Command::new(env!("CARGO_BIN_EXE_slotfill"))
        .args(["gen-corpus", "--seed", "3", "--train", "20", "--dev", "8", "--test", "8"])
        .current_dir(dir)
        .env("SLOTFILL_OUT_DIR", "from_env")
        .output()
        .expect("binary runs");
    assert_ok(&out);
    assert!(dir.join("from_env/train.conll").is_file());
}

#[test]
fn config_file_drives_training_and_flags_override_it() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_ok(&slotfill(
        &["gen-corpus", "--seed", "6", "--train", "40", "--dev", "12", "--test", "12", "--out", "data"],
        dir,
    ));
    std::fs::write(
        dir.join("exp.toml"),
        r#"
[paths]
train = "data/train.conll"
dev = "data/dev.conll"
out_dir = "runs"

[hyper]
word_dim = 8
char_dim = 4
hidden_dim = 8

[train]
epochs = 5
seed = 2

[[methods]]
name = "charaug_laug"
loss_type = "aug"

[methods.text_augment]
method = "char_aug"
p = 0.3
seed = 0
"#,
    )
    .unwrap();
    // Flag --epochs overrides the file's 5; the method delta switches the
    // loss on top of the base [train] table.
    assert_ok(&slotfill(
        &["train", "--config", "exp.toml", "--method", "charaug_laug", "--epochs", "1"],
        dir,
    ));
    let log = read(&dir.join("runs/trainlog_charaug_laug.csv"));
    assert_eq!(log.lines().count(), 2, "header plus exactly one epoch: {log}");
    let unknown = slotfill(&["train", "--config", "exp.toml", "--method", "nope"], dir);
    assert_eq!(unknown.status.code(), Some(3));
}
