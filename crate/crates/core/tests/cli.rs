use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use parity_bpe::corpus::{discover_dev_languages, load_parallel_dev};
use parity_bpe::metrics::{full_report, EvalOptions, MetricReport};
use parity_bpe::tokenizer::{load_model, save_model, TokenizerModel};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_parity-bpe"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn binary")
}

fn run_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn binary");
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL_SPEC: &str = r#"{
  "languages": [
    {"lang": "aa", "alphabet": "abcdefgh", "proportion": 0.8, "word_length": [2, 6]},
    {"lang": "bb", "alphabet": "αβγδεζηθ", "proportion": 0.2, "word_length": [2, 5]}
  ],
  "concepts": 120,
  "zipf_exponent": 1.1,
  "words_per_line": [4, 9],
  "train_bytes": 40000,
  "dev_lines": 40
}"#;

/// Writes the small two-language corpus; returns (manifest, dev dir).
fn synth(dir: &Path, seed: &str) -> (PathBuf, PathBuf) {
    let spec = dir.join("spec.json");
    fs::write(&spec, SMALL_SPEC).unwrap();
    let out = dir.join(format!("corpus-{seed}"));
    ok(&run(&["synth", "--out", s(&out), "--seed", seed, "--spec", s(&spec)]));
    (out.join("manifest.json"), out.join("dev"))
}

fn merges_of(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(str::to_owned)
        .collect()
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (m1, d1) = synth(dir.path(), "4");
    let spec = dir.path().join("spec.json");
    let again = dir.path().join("again");
    ok(&run(&["synth", "--out", s(&again), "--seed", "4", "--spec", s(&spec)]));
    for rel in ["train/aa.jsonl", "train/bb.jsonl"] {
        assert_eq!(
            fs::read(m1.parent().unwrap().join(rel)).unwrap(),
            fs::read(again.join(rel)).unwrap()
        );
    }
    assert_eq!(
        fs::read(d1.join("bb.txt")).unwrap(),
        fs::read(again.join("dev/bb.txt")).unwrap()
    );
    let bad = dir.path().join("bad.json");
    fs::write(&bad, SMALL_SPEC.replace("0.2", "0.3")).unwrap();
    let out = run(&["synth", "--out", s(&dir.path().join("x")), "--spec", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_variants_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, dev) = synth(dir.path(), "1");
    let p = |n: &str| dir.path().join(n);

    ok(&run(&[
        "train", "--classical", "--merges", "60", "--corpus", s(&manifest), "--dev", s(&dev),
        "--out", s(&p("classical.txt")),
    ]));
    ok(&run(&[
        "train", "--parity", "--merges", "60", "--dev", s(&dev), "--window", "--alpha", "2",
        "--corpus", s(&manifest), "--out", s(&p("parity.txt")),
    ]));
    ok(&run(&[
        "train", "--parity", "--hybrid-split", "0.5", "--merges", "60", "--dev", s(&dev),
        "--corpus", s(&manifest), "--out", s(&p("hybrid.txt")),
    ]));
    ok(&run(&[
        "train", "--no-dev", "--merges", "30", "--corpus", s(&manifest), "--out", s(&p("nodev.txt")),
    ]));

    let classical = merges_of(&p("classical.txt"));
    let hybrid = merges_of(&p("hybrid.txt"));
    assert_eq!(classical.len(), 60);
    assert_eq!(hybrid[..30], classical[..30]);

    let summary: Value =
        serde_json::from_str(&fs::read_to_string(p("parity.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["window"], 100);
    assert_eq!(summary["config"]["alpha"], 2.0);
    assert_eq!(summary["merges_learned"], 60);
    assert_eq!(summary["config_sha256"].as_str().unwrap().len(), 64);
    assert!(summary["inputs"].as_object().unwrap().len() >= 5);
    let langs = summary["dev_cr"]["languages"].as_object().unwrap();
    assert_eq!(langs.len(), 2);
    assert_eq!(summary["dev_cr"]["unit"], "lines");

    let nodev: Value =
        serde_json::from_str(&fs::read_to_string(p("nodev.summary.json")).unwrap()).unwrap();
    assert_eq!(nodev["dev_cr"]["unit"], "bytes");

    let log = fs::read_to_string(p("parity.log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 60);
    let first: Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert!(first["lang"].is_string());
    assert!(first["cr_snapshot"].is_object());

    // config file, overridden by a flag
    let cfg = p("run.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"mode":"classical","merges":5,"corpus":"{}","out":"{}"}}"#,
            s(&manifest),
            s(&p("cfg.txt"))
        ),
    )
    .unwrap();
    ok(&run(&["train", "--config", s(&cfg), "--merges", "8"]));
    assert_eq!(merges_of(&p("cfg.txt")), classical[..8]);
}

#[test]
fn train_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = synth(dir.path(), "2");
    // parity without dev is a usage error
    let out = run(&["train", "--parity", "--merges", "5", "--corpus", s(&manifest)]);
    assert_eq!(out.status.code(), Some(1));
    // malformed training record is a data error
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"text\": \"ab\", \"lang\": \"aa\"}\nnot json\n").unwrap();
    let m = dir.path().join("m.json");
    fs::write(&m, format!(r#"{{"languages":[{{"lang":"aa","path":"{}"}}]}}"#, s(&bad))).unwrap();
    let out = run(&["train", "--classical", "--merges", "5", "--corpus", s(&m)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2:"));
}

#[test]
fn encode_decode() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("ex.txt");
    let model = TokenizerModel::from_merges([("b", "a"), ("ba", "b")]).unwrap();
    save_model(&model, &model_path).unwrap();
    let m = s(&model_path);

    let out = run_stdin(&["encode", "--model", m], b"babab\n");
    ok(&out);
    assert_eq!(out.stdout, b"ba bab\n");
    let out = run_stdin(&["encode", "--model", m, "--ids"], b"babab\n");
    assert_eq!(out.stdout, b"256 257\n");

    let out = run_stdin(&["encode", "--model", m], b"");
    ok(&out);
    assert!(out.stdout.is_empty());

    // newline-terminated fuzz lines survive encode | decode
    let mut fuzz = Vec::new();
    let mut x: u32 = 12345;
    for _ in 0..300 {
        x = x.wrapping_mul(1_103_515_245).wrapping_add(12345);
        let len = (x >> 16) % 40;
        for _ in 0..len {
            x = x.wrapping_mul(1_103_515_245).wrapping_add(12345);
            let b = (x >> 16) as u8;
            fuzz.push(if b == b'\n' { b'b' } else { b });
        }
        fuzz.push(b'\n');
    }
    let input = dir.path().join("fuzz.bin");
    fs::write(&input, &fuzz).unwrap();
    for ids in [false, true] {
        let mut args = vec!["encode", "--model", m, "--input", s(&input)];
        if ids {
            args.push("--ids");
        }
        let enc = run(&args);
        ok(&enc);
        let mut args = vec!["decode", "--model", m];
        if ids {
            args.push("--ids");
        }
        let dec = run_stdin(&args, &enc.stdout);
        ok(&dec);
        assert_eq!(dec.stdout, fuzz);
    }

    let out = run_stdin(&["decode", "--model", m, "--ids"], b"256 999\n");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("999"));
}

#[test]
fn eval_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, dev) = synth(dir.path(), "3");
    let p = |n: &str| dir.path().join(n);
    save_model(&TokenizerModel::identity(), &p("b-identity.txt")).unwrap();
    ok(&run(&[
        "train", "--classical", "--merges", "40", "--corpus", s(&manifest), "--out", s(&p("c-classical.txt")),
    ]));
    ok(&run(&[
        "train", "--parity", "--merges", "40", "--corpus", s(&manifest), "--dev", s(&dev),
        "--out", s(&p("a-parity.txt")),
    ]));

    let out = run(&["eval", "--model", s(&p("b-identity.txt")), "--dev", s(&dev)]);
    ok(&out);
    let report: MetricReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.global.metrics.compression["bytes"].ratio_of_sums, 1.0);
    assert_eq!(report.global.metrics.compression["bytes"].mean_of_ratios, 1.0);

    // the CLI report equals the library call on the same inputs
    let out = run(&[
        "eval", "--model", s(&p("a-parity.txt")), "--dev", s(&dev), "--renyi-alpha", "2.5",
        "--renyi-alpha", "inf", "--csv", s(&p("eval.csv")), "--out", s(&p("eval.json")),
    ]);
    ok(&out);
    let cli: MetricReport = serde_json::from_str(&fs::read_to_string(p("eval.json")).unwrap()).unwrap();
    let dev_corpus = load_parallel_dev(&dev, &discover_dev_languages(&dev).unwrap()).unwrap();
    let opts = EvalOptions {
        renyi_alphas: vec![2.5, f64::INFINITY],
        ..EvalOptions::default()
    };
    let lib = full_report(&load_model(&p("a-parity.txt")).unwrap(), &dev_corpus, &opts).unwrap();
    assert_eq!(cli, lib);
    assert!(fs::read_to_string(p("eval.csv")).unwrap().contains("gini,"));

    // two models on the same dev: only model-dependent provenance differs
    let other = full_report(&load_model(&p("c-classical.txt")).unwrap(), &dev_corpus, &opts).unwrap();
    assert_eq!(other.provenance.dev_sha256, lib.provenance.dev_sha256);
    assert_ne!(other.provenance.model_sha256, lib.provenance.model_sha256);

    let out = run(&[
        "compare", "--models", s(&p("c-classical.txt")), s(&p("a-parity.txt")),
        s(&p("b-identity.txt")), "--dev", s(&dev), "--csv", s(&p("cmp.csv")),
    ]);
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(header, ["metric", "a-parity.txt", "b-identity.txt", "c-classical.txt"]);
    // vocabulary sizes differ from the identity model
    assert!(String::from_utf8_lossy(&out.stderr).contains("vocabulary sizes differ"));
    let csv = fs::read_to_string(p("cmp.csv")).unwrap();
    let gini_row: Vec<f64> = csv
        .lines()
        .find(|l| l.starts_with("gini,"))
        .unwrap()
        .split(',')
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(gini_row[0] < gini_row[2], "parity vs classical gini {gini_row:?}");

    let out = run(&[
        "compare", "--models", s(&p("a-parity.txt")), s(&p("a-parity.txt")), "--dev", s(&dev),
    ]);
    ok(&out);
    for line in String::from_utf8(out.stdout).unwrap().lines().skip(1) {
        let cells: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(cells[1], cells[2]);
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["train", "--classical", "--parity"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let out = run(&["eval", "--model", "nope.txt", "--dev", "nowhere"]);
    assert_eq!(out.status.code(), Some(2));
}
