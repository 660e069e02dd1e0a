use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use uglseg::corpus::{write_bakeoff, SegmentedSentence};
use uglseg::model::UglModel;
use uglseg::ptrain::{self, TrainConfig};
use uglseg::synth::{toy_corpus, transfer_task};
use uglseg::transfer;

fn uglseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uglseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = uglseg(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> (i32, String) {
    let out = uglseg(args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write(dir: &TempDir, name: &str, corpus: &[SegmentedSentence]) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, write_bakeoff(corpus)).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn column(table: &str, col: usize) -> Vec<String> {
    table
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with("dev_F"))
        .map(|l| l.split('\t').nth(col).unwrap().to_string())
        .collect()
}

fn dev_f(stdout: &str) -> f64 {
    let line = stdout.lines().find(|l| l.starts_with("dev_F")).expect("dev line");
    line.split('\t').nth(1).unwrap().parse().unwrap()
}

#[test]
fn training_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let toy = write(&dir, "toy.utf8", &toy_corpus(1, 12));
    let (a, b) = (dir.path().join("a.ugl"), dir.path().join("b.ugl"));
    for m in [&a, &b] {
        ok(&["train", "--corpus", s(&toy), "--epochs", "2", "--dim", "8", "--seed", "7", "--model", s(m)]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn async_single_thread_matches_serial() {
    let dir = TempDir::new().unwrap();
    let toy = write(&dir, "toy.utf8", &toy_corpus(2, 12));
    let model = dir.path().join("m.ugl");
    let common = ["--corpus", s(&toy), "--epochs", "3", "--dim", "8", "--seed", "7", "--model", s(&model)];
    let serial = ok(&[&["train", "--mode", "serial"], &common[..]].concat());
    let asynch = ok(&[&["train", "--mode", "async", "--threads", "1"], &common[..]].concat());
    assert_eq!(column(&serial, 1), column(&asynch, 1));
}

#[test]
fn serial_mode_with_threads_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let toy = write(&dir, "toy.utf8", &toy_corpus(2, 5));
    let (c, err) = code(&["train", "--corpus", s(&toy), "--mode", "serial", "--threads", "2"]);
    assert_eq!(c, 2, "{err}");
    assert_eq!(code(&["train", "--epochs", "1"]).0, 2);
    assert_eq!(code(&["train", "--corpus", "/nonexistent/x.utf8"]).0, 2);
    assert_eq!(code(&["train", "--corpus", s(&toy), "--window", "4"]).0, 2);
}

#[test]
fn overfit_then_predict_and_score() {
    let dir = TempDir::new().unwrap();
    let toy = write(&dir, "toy.utf8", &toy_corpus(0, 50));
    let model = dir.path().join("m.ugl");
    let out = ok(&[
        "train", "--corpus", s(&toy), "--dev", s(&toy), "--epochs", "60", "--dim", "16", "--seed", "7", "--model",
        s(&model),
    ]);
    assert!(dev_f(&out) >= 0.99, "{out}");
    let pred = dir.path().join("pred.utf8");
    ok(&["predict", "--model", s(&model), "--input", s(&toy), "--output", s(&pred)]);
    let report = ok(&["score", "--gold", s(&toy), "--pred", s(&pred), "--tsv"]);
    let f: f64 = report.lines().nth(1).unwrap().split('\t').nth(2).unwrap().parse().unwrap();
    assert!(f >= 0.99, "{report}");
}

#[test]
fn score_identical_and_misaligned_files() {
    let dir = TempDir::new().unwrap();
    let gold = dir.path().join("gold.utf8");
    std::fs::write(&gold, "他 来到 北京\n\n我 爱 你\n").unwrap();
    let out = ok(&["score", "--gold", s(&gold), "--pred", s(&gold)]);
    assert_eq!(out.lines().next().unwrap(), "100.0 100.0 100.0");
    let bad = dir.path().join("bad.utf8");
    std::fs::write(&bad, "他 来到 北京\n我 恨 你\n").unwrap();
    let (c, err) = code(&["score", "--gold", s(&gold), "--pred", s(&bad)]);
    assert_eq!(c, 3);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn predict_refuses_a_foreign_vocabulary() {
    let dir = TempDir::new().unwrap();
    let toy = write(&dir, "toy.utf8", &toy_corpus(3, 8));
    let model = dir.path().join("m.ugl");
    ok(&["train", "--corpus", s(&toy), "--epochs", "1", "--dim", "4", "--model", s(&model)]);
    let own = dir.path().join("own.vocab");
    std::fs::write(&own, UglModel::load(&model).unwrap().vocab.to_text()).unwrap();
    ok(&["predict", "--model", s(&model), "--input", s(&toy), "--vocab", s(&own)]);
    let foreign = dir.path().join("foreign.vocab");
    let other = transfer::joint_vocab(&toy_corpus(4, 8), &[], 3).unwrap();
    std::fs::write(&foreign, other.to_text()).unwrap();
    let (c, err) = code(&["predict", "--model", s(&model), "--input", s(&toy), "--vocab", s(&foreign)]);
    assert_eq!(c, 3);
    assert!(err.contains("does not match"), "{err}");
}

#[test]
fn predict_keeps_line_structure() {
    let dir = TempDir::new().unwrap();
    let toy = write(&dir, "toy.utf8", &toy_corpus(3, 8));
    let model = dir.path().join("m.ugl");
    ok(&["train", "--corpus", s(&toy), "--epochs", "1", "--dim", "4", "--model", s(&model)]);
    let input = dir.path().join("raw.txt");
    std::fs::write(&input, "他来到2024年的北京\n\nabc").unwrap();
    let out = ok(&["predict", "--model", s(&model), "--input", s(&input)]);
    let lines: Vec<&str> = out.split('\n').collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0].replace(' ', ""), "他来到2024年的北京");
    assert_eq!(lines[1], "");
    assert_eq!(lines[2].replace(' ', ""), "abc");
}

#[test]
fn bench_emits_one_row_per_run() {
    let dir = TempDir::new().unwrap();
    let toy = write(&dir, "toy.utf8", &toy_corpus(5, 16));
    let args = [
        "bench", "--corpus", s(&toy), "--modes", "serial,async", "--threads-list", "1,2,4", "--epochs", "1", "--dim",
        "4", "--seed", "3",
    ];
    let a = ok(&args);
    assert_eq!(a.lines().count(), 5);
    assert_eq!(a.lines().next().unwrap(), "mode\tthreads\tepoch_seconds\tfinal_F");
    let b = ok(&args);
    assert_eq!(a.lines().nth(1).unwrap().split('\t').nth(3), b.lines().nth(1).unwrap().split('\t').nth(3));
}

#[test]
fn config_file_round_trip() {
    let dir = TempDir::new().unwrap();
    let toy = write(&dir, "toy.utf8", &toy_corpus(6, 6));
    let first = dir.path().join("first.cfg");
    let second = dir.path().join("second.cfg");
    let model = dir.path().join("m.ugl");
    ok(&[
        "train", "--corpus", s(&toy), "--epochs", "1", "--dim", "4", "--lr", "0.02", "--clip", "none", "--model",
        s(&model), "--save-config", s(&first),
    ]);
    ok(&["train", "--config", s(&first), "--save-config", s(&second)]);
    let a = std::fs::read_to_string(&first).unwrap();
    assert_eq!(a, std::fs::read_to_string(&second).unwrap());
    assert!(a.contains("lr=0.02") && a.contains("clip=none") && a.contains("batch_size=16"));
    let c = std::fs::read_to_string(&first).unwrap() + "epochs=2\n";
    std::fs::write(&first, c).unwrap();
    let out = ok(&["train", "--config", s(&first), "--epochs", "3"]);
    assert_eq!(column(&out, 0).len(), 3);
}

#[test]
fn help_lists_defaults() {
    let help = ok(&["train", "--help"]);
    for d in ["[default: 100]", "[default: 5]", "[default: 16]", "[default: 0.01]", "[default: 3]"] {
        assert!(help.contains(d), "{d}");
    }
}

#[test]
fn transfer_without_mixing_equals_training_from_teacher() {
    let dir = TempDir::new().unwrap();
    let task = transfer_task(1);
    let high = write(&dir, "high.utf8", &task.high[..30]);
    let low = write(&dir, "low.utf8", &task.low[..20]);
    let teacher = dir.path().join("t.ugl");
    let student = dir.path().join("s.ugl");
    let hist = dir.path().join("hist.tsv");
    ok(&["train", "--corpus", s(&high), "--epochs", "1", "--dim", "6", "--window", "3", "--seed", "2", "--model", s(&teacher)]);
    ok(&[
        "transfer", "--high", s(&high), "--low", s(&low), "--teacher", s(&teacher), "--mix", "0", "--epochs", "2",
        "--seed", "2", "--model", s(&student), "--history", s(&hist),
    ]);
    let t = UglModel::load(&teacher).unwrap();
    let vocab = transfer::joint_vocab(&task.high[..30], &task.low[..20], 3).unwrap();
    let mut expected = transfer::init_student(&t, vocab, 2).unwrap();
    let cfg = TrainConfig {
        epochs: 2,
        seed: 2,
        ..TrainConfig::default()
    };
    ptrain::train(&mut expected, &task.low[..20], None, &cfg).unwrap();
    let roundtrip = dir.path().join("expected.ugl");
    expected.save(&roundtrip).unwrap();
    assert_eq!(std::fs::read(&student).unwrap(), std::fs::read(&roundtrip).unwrap());
    assert_eq!(std::fs::read_to_string(&hist).unwrap().lines().count(), 3);
    let (c, _) = code(&["transfer", "--high", s(&high), "--low", s(&low), "--teacher", s(&teacher), "--dim", "8"]);
    assert_eq!(c, 3);
    assert_eq!(code(&["transfer", "--high", s(&high)]).0, 2);
}

#[test]
fn transfer_through_the_cli_beats_low_only_training() {
    let dir = TempDir::new().unwrap();
    let task = transfer_task(0);
    let high = write(&dir, "high.utf8", &task.high);
    let low = write(&dir, "low.utf8", &task.low);
    let dev = write(&dir, "dev.utf8", &task.low_dev);
    let arch = ["--dim", "16", "--bigrams", "false", "--seed", "0"];
    let with = ok(&[
        &["transfer", "--high", s(&high), "--low", s(&low), "--dev", s(&dev), "--teacher-epochs", "10", "--epochs", "20"][..],
        &arch,
        &["--model", s(&dir.path().join("s.ugl")), "--history", s(&dir.path().join("h.tsv"))],
    ]
    .concat());
    let without = ok(&[
        &["train", "--corpus", s(&low), "--dev", s(&dev), "--epochs", "20"][..],
        &arch,
        &["--model", s(&dir.path().join("b.ugl"))],
    ]
    .concat());
    assert!(dev_f(&with) >= dev_f(&without), "{} vs {}", dev_f(&with), dev_f(&without));
}
