use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tweetfilter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tweetfilter"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

/// Planted synthetic data plus a model built from it.
fn planted() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = tweetfilter(&["synth", "--seed", "42", "--out-dir", &path(&dir, "syn")]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = tweetfilter(&[
        "build-refmodel",
        "--tweets",
        &path(&dir, "syn/tweets.jsonl"),
        "--out",
        &path(&dir, "model"),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    dir
}

fn run_args<'a>(dir: &'a TempDir, extra: &[&'a str]) -> Vec<String> {
    let mut args: Vec<String> = vec![
        "run".into(),
        "--model".into(),
        path(dir, "model"),
        "--profiles".into(),
        path(dir, "syn/profiles.json"),
        "--tweets".into(),
        path(dir, "syn/tweets.jsonl"),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    args
}

fn run(args: &[String]) -> Output {
    tweetfilter(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn run_without_model_is_usage_error() {
    let out = tweetfilter(&[
        "run",
        "--profiles",
        "p.json",
        "--tweets",
        "t.jsonl",
        "--out",
        "r.tsv",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--model"), "{}", stderr(&out));
}

#[test]
fn bad_flag_values_are_usage_errors() {
    for (flag, value) in [
        ("--theta", "1.5"),
        ("--mu", "0"),
        ("--mu", "-3"),
        ("--jobs", "0"),
        ("--t", "nan"),
    ] {
        let out = tweetfilter(&[
            "run",
            "--model",
            "m",
            "--profiles",
            "p",
            "--tweets",
            "t",
            "--out",
            "o",
            flag,
            value,
        ]);
        assert_eq!(out.status.code(), Some(2), "{flag} {value}");
        assert!(stderr(&out).contains(flag), "{flag}: {}", stderr(&out));
    }
    let out = tweetfilter(&[
        "eval",
        "--run",
        "r",
        "--qrels",
        "q",
        "--clusters",
        "c",
        "--out",
        "o",
        "--gain-mode",
        "graded",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--gain-mode"));
    let out = tweetfilter(&[
        "sweep",
        "--model",
        "m",
        "--profiles",
        "p",
        "--tweets",
        "t",
        "--qrels",
        "q",
        "--clusters",
        "c",
        "--out",
        "o",
        "--thresholds",
        "1:0:0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--thresholds"));
}

#[test]
fn build_refmodel_on_empty_file_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    let out = tweetfilter(&[
        "build-refmodel",
        "--tweets",
        &path(&dir, "empty.jsonl"),
        "--out",
        &path(&dir, "m"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("empty.jsonl"), "{}", stderr(&out));
}

#[test]
fn malformed_tweet_reports_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("t.jsonl"),
        "{\"id\":\"1\",\"timestamp_ms\":1,\"text\":\"a\"}\n{\"id\":\"2\"\n",
    )
    .unwrap();
    let out = tweetfilter(&[
        "build-refmodel",
        "--tweets",
        &path(&dir, "t.jsonl"),
        "--out",
        &path(&dir, "m"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("t.jsonl") && err.contains("line 2"), "{err}");
}

#[test]
fn missing_input_file_is_data_error() {
    let dir = planted();
    let out = run(&run_args(&dir, &["--out", &path(&dir, "r.tsv")])
        .into_iter()
        .map(|a| {
            if a.ends_with("profiles.json") {
                path(&dir, "nope.json")
            } else {
                a
            }
        })
        .collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nope.json"));
}

#[test]
fn eval_on_planted_run_reports_perfect_map() {
    let dir = planted();
    let run_tsv = path(&dir, "run.tsv");
    let out = run(&run_args(
        &dir,
        &["--t", "0", "--theta", "1", "--out", &run_tsv],
    ));
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = stderr(&out);
    assert!(
        summary.contains("260 tweets processed") && summary.contains("60 pushes"),
        "{summary}"
    );
    assert!(fs::read_to_string(&run_tsv)
        .unwrap()
        .starts_with("# tweetfilter"));

    let report = path(&dir, "eval.json");
    let out = tweetfilter(&[
        "eval",
        "--run",
        &run_tsv,
        "--qrels",
        &path(&dir, "syn/qrels.txt"),
        "--clusters",
        &path(&dir, "syn/clusters.json"),
        "--tweets",
        &path(&dir, "syn/tweets.jsonl"),
        "--out",
        &report,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["mean"]["map"].as_f64(), Some(1.0));
    assert_eq!(json["mean"]["cg30"].as_f64(), Some(4.0));
    assert_eq!(json["per_topic"].as_object().unwrap().len(), 5);
}

#[test]
fn sweep_writes_csv() {
    let dir = planted();
    let csv = path(&dir, "sweep.csv");
    let mut args = run_args(&dir, &[]);
    args[0] = "sweep".into();
    args.extend(
        [
            "--no-novelty",
            "--thresholds=-0.1:0.5:0.1",
            "--qrels",
            &path(&dir, "syn/qrels.txt"),
            "--clusters",
            &path(&dir, "syn/clusters.json"),
            "--out",
            &csv,
        ]
        .map(String::from),
    );
    let out = run(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "threshold,pushed,relevant_pushed,precision,recall");
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[2], "0.000000,60,60,1.000000,1.000000");
}

#[test]
fn relabel_writes_consistent_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("q.txt"), "T 1 1\nT 2 2\nT 3 2\nT 4 0\n").unwrap();
    fs::write(dir.path().join("c.json"), r#"{"T": [["1", "2", "3"]]}"#).unwrap();
    fs::write(
        dir.path().join("t.jsonl"),
        "{\"id\":\"3\",\"timestamp_ms\":5,\"text\":\"x\"}\n{\"id\":\"2\",\"timestamp_ms\":9,\"text\":\"x\"}\n",
    )
    .unwrap();
    let out = tweetfilter(&[
        "relabel",
        "--qrels",
        &path(&dir, "q.txt"),
        "--clusters",
        &path(&dir, "c.json"),
        "--tweets",
        &path(&dir, "t.jsonl"),
        "--out-qrels",
        &path(&dir, "q2.txt"),
        "--out-clusters",
        &path(&dir, "c2.json"),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        fs::read_to_string(dir.path().join("q2.txt")).unwrap(),
        "T Q0 2 2\nT Q0 3 1\n"
    );
    let clusters: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("c2.json")).unwrap()).unwrap();
    assert_eq!(clusters, serde_json::json!({"T": [["3", "2"]]}));
}

#[test]
fn resume_from_checkpoint_matches_full_run() {
    let dir = planted();
    let full = path(&dir, "full.tsv");
    assert!(run(&run_args(&dir, &["--t", "0", "--out", &full]))
        .status
        .success());

    // A checkpoint taken over the first part of the stream.
    let tweets = fs::read_to_string(dir.path().join("syn/tweets.jsonl")).unwrap();
    let prefix: String = tweets.lines().take(100).map(|l| format!("{l}\n")).collect();
    fs::write(dir.path().join("prefix.jsonl"), prefix).unwrap();
    let cp = path(&dir, "cp.json");
    let mut args = run_args(
        &dir,
        &[
            "--t",
            "0",
            "--out",
            "/dev/null",
            "--checkpoint",
            &cp,
            "--checkpoint-every",
            "30",
        ],
    );
    args[6] = path(&dir, "prefix.jsonl");
    let out = run(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(Path::new(&cp).exists());

    let resumed = path(&dir, "resumed.tsv");
    let out = run(&run_args(
        &dir,
        &[
            "--t",
            "0",
            "--out",
            &resumed,
            "--checkpoint",
            &cp,
            "--resume",
        ],
    ));
    assert!(out.status.success(), "{}", stderr(&out));
    let body = |p: &str| -> String {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(body(&resumed), body(&full));

    // A checkpoint from another configuration is refused.
    let out = run(&run_args(
        &dir,
        &[
            "--t",
            "1",
            "--out",
            &resumed,
            "--checkpoint",
            &cp,
            "--resume",
        ],
    ));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("checkpoint"), "{}", stderr(&out));
}
