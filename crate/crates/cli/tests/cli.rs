use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use legalmeta::actors::write_dataset;
use legalmeta::engine::to_jsonl;
use legalmeta::synthetic::{actor_dataset, phrase_count_fixture};
use legalmeta::Concept;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_legalmeta"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn corpus() -> String {
    fixture("micro_corpus.jsonl").display().to_string()
}

#[test]
fn annotate_finds_the_permission() {
    let o = run(&["annotate", "--corpus", &corpus(), "--workers", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.contains("\"roads-permission\"")).unwrap();
    assert!(line.contains("\"statement_type\":\"permission\""));
    assert_eq!(out.lines().count(), 5);
}

#[test]
fn worker_count_does_not_change_bytes() {
    let one = run(&["annotate", "--corpus", &corpus(), "--workers", "1"]);
    let four = run(&["annotate", "--corpus", &corpus(), "--workers", "4"]);
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn missing_lexicon_dir_is_named() {
    let o = run(&["annotate", "--corpus", &corpus(), "--lexicons", "/no/such/lexicons"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/lexicons"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["annotate", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["annotate"]).status.code(), Some(1));
    assert_eq!(run(&["annotate", "--corpus", &corpus(), "--workers", "0"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_corpus_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"id\": \"x\"}\n").unwrap();
    let o = run(&["annotate", "--corpus", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["annotate", "--corpus", bad.to_str().unwrap(), "--lenient"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "");
}

#[test]
fn query_prints_one_line_per_match() {
    let o = run(&["query", "PP << marker:condition", "--corpus", &corpus()]);
    assert!(o.status.success());
    let out = stdout(&o);
    let line = out.lines().find(|l| l.starts_with("limits-pp\t")).unwrap();
    assert_eq!(line, "limits-pp\tPP\t[0,3)\tWithin the limits");
    assert_eq!(out.lines().filter(|l| l.starts_with("limits-pp\t")).count(), 1);

    let none = run(&["query", "Srel < marker:sanction", "--corpus", &corpus()]);
    assert!(none.status.success());
    assert_eq!(stdout(&none), "");
}

#[test]
fn malformed_pattern_shows_a_caret() {
    let o = run(&["query", "PP <<", "--corpus", &corpus()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("PP <<\n"));
    assert!(err.contains("     ^"));
}

#[test]
fn eval_of_gold_against_itself_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let gold = fixture("micro_gold.jsonl");
    let o = run(&[
        "eval",
        "--gold",
        gold.to_str().unwrap(),
        "--pred",
        gold.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("phrase subtotal P / R: 100.0 / 100.0"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["phrase_total"]["fp"], 0);
    assert_eq!(json["phrase_total"]["fn"], 0);
}

#[test]
fn eval_prints_the_subtotal_pair() {
    let dir = tempfile::tempdir().unwrap();
    let (pred, gold) = phrase_count_fixture(&[(Concept::Condition, 1069, 31, 58)], &[]);
    let (p, g) = (dir.path().join("pred.jsonl"), dir.path().join("gold.jsonl"));
    fs::write(&p, to_jsonl(&pred)).unwrap();
    fs::write(&g, to_jsonl(&gold)).unwrap();
    let o = run(&["eval", "--gold", g.to_str().unwrap(), "--pred", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("phrase subtotal P / R: 97.2 / 94.9"));

    let o = run(&["eval", "--gold", g.to_str().unwrap(), "--pred", p.to_str().unwrap(), "--exclude", "nonsense"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn eval_rejects_mismatched_ids() {
    let o = run(&[
        "eval",
        "--gold",
        fixture("micro_gold.jsonl").to_str().unwrap(),
        "--pred",
        fixture("micro_corpus.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn kappa_of_an_annotator_with_itself_is_one() {
    let gold = fixture("micro_gold.jsonl");
    let o = run(&["kappa", "--gold", gold.to_str().unwrap(), "--pred", gold.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("kappa 1.0000"));
}

#[test]
fn training_is_reproducible_and_models_classify() {
    let dir = tempfile::tempdir().unwrap();
    let data: Vec<_> = actor_dataset(150, 11).into_iter().map(|(f, r)| (f.to_row(), Some(r))).collect();
    let csv = dir.path().join("features.csv");
    let mut buf = Vec::new();
    write_dataset(&mut buf, &data).unwrap();
    fs::write(&csv, buf).unwrap();

    let (m1, m2) = (dir.path().join("m1.json"), dir.path().join("m2.json"));
    for m in [&m1, &m2] {
        let o = run(&[
            "train-actors",
            "--features",
            csv.to_str().unwrap(),
            "--seed",
            "9",
            "--trees",
            "15",
            "--out",
            m.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());

    let o = run(&["classify-actors", "--corpus", &corpus(), "--model", m1.to_str().unwrap(), "--workers", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 5);
    assert!(!out.contains("\"type\":\"actor\"") || out.contains("cannot_classify"));

    let bad = run(&["classify-actors", "--corpus", &corpus(), "--model", m1.to_str().unwrap(), "--t1", "1.5"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn features_from_gold_annotations() {
    let o = run(&["features", "--corpus", &corpus(), "--gold", fixture("micro_gold.jsonl").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    let header = lines.next().unwrap();
    assert_eq!(header.split(',').count(), 32);
    assert!(header.ends_with(",label"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn config_file_fills_in_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!("corpus = {:?}\nworkers = 2\nout = \"from-config.jsonl\"\n", corpus()),
    )
    .unwrap();
    let o = run(&["annotate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("from-config.jsonl").exists());

    let flag_out = dir.path().join("from-flag.jsonl");
    let o = run(&["annotate", "--config", cfg.to_str().unwrap(), "--out", flag_out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(
        fs::read(&flag_out).unwrap(),
        fs::read(dir.path().join("from-config.jsonl")).unwrap()
    );
}
