use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use axum::http::StatusCode;
use gesture_labeler::cli::manifest_path;
use gesture_labeler::prelude::*;
use gesture_labeler::similarity::mock::MockScoringServer;
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gesture-label"))
        .args(args)
        .output()
        .expect("run gesture-label")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn data(name: &str) -> String {
    fixture::data_path(name).display().to_string()
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn moving_run_writes_labels_and_manifest() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "moving.jsonl");
    let o = bin(&["label", "--algo", "moving", "--corpus", &data("mini_corpus.jsonl"), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let labels = gesture_labeler::io::load_labels(&out).unwrap();
    assert!(!labels.is_empty());
    let m = read_json(&manifest_path(&out));
    assert_eq!(m["algorithm"], "moving");
    assert_eq!(m["tokenizer"], gesture_labeler::tokenize::TOKENIZER_VERSION);
    assert_eq!(m["labels"], labels.len());
    assert_eq!(m["sentences"], 50);
    assert!(m["backend_calls"]["distinct"].as_u64().unwrap() > 0);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    for algo in ["moving", "baseline"] {
        let a = p(&dir, &format!("{algo}-a.jsonl"));
        let b = p(&dir, &format!("{algo}-b.jsonl"));
        for out in [&a, &b] {
            let o = bin(&[
                "label", "--algo", algo, "--fallback-stats", "--start-rate", "0.3", "--seed", "11",
                "--corpus", &data("mini_corpus.jsonl"), "--out", s(out),
            ]);
            assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{algo}");
    }
}

#[test]
fn fixed_without_window_table_is_invalid() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "fixed.jsonl");
    let o = bin(&["label", "--algo", "fixed", "--corpus", &data("mini_corpus.jsonl"), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("window table"));
    assert!(!out.exists());
}

#[test]
fn calibrate_then_fixed_with_forced_window() {
    let dir = TempDir::new().unwrap();
    let windows = p(&dir, "windows.json");
    let o = bin(&[
        "calibrate", "--corpus", &data("mini_corpus.jsonl"), "--out", s(&windows), "--min-count", "2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = read_json(&windows);
    assert_eq!(table["windows"].as_object().unwrap().len(), 12);
    assert_eq!(table["min_count"], 2);
    assert!(table["config_hash"].is_string());

    let out = p(&dir, "fixed.jsonl");
    let o = bin(&[
        "label", "--algo", "fixed", "--corpus", &data("mini_corpus.jsonl"), "--windows", s(&windows),
        "--force-window", "greeting=1", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let labels = gesture_labeler::io::load_labels(&out).unwrap();
    assert!(labels.iter().filter(|l| l.gesture_id == "greeting").all(|l| l.len == 1));

    let o = bin(&[
        "label", "--algo", "fixed", "--corpus", &data("mini_corpus.jsonl"), "--force-window", "nope=2",
        "--out", s(&out),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn empty_corpus_gives_empty_output() {
    let dir = TempDir::new().unwrap();
    let corpus = p(&dir, "empty.jsonl");
    std::fs::write(&corpus, "").unwrap();
    let out = p(&dir, "out.jsonl");
    let o = bin(&["label", "--algo", "moving", "--corpus", s(&corpus), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "");
    assert_eq!(read_json(&manifest_path(&out))["labels"], 0);
}

#[test]
fn invalid_parameters_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "w.json");
    let corpus = data("mini_corpus.jsonl");
    for args in [
        vec!["calibrate", "--corpus", &corpus, "--out", s(&out), "--wmax", "0"],
        vec!["label", "--algo", "moving", "--corpus", &corpus, "--out", s(&out), "--th0", "1.5"],
        vec!["label", "--algo", "moving", "--corpus", &corpus, "--out", s(&out), "--p", "0"],
        vec!["label", "--algo", "moving", "--corpus", &corpus, "--out", s(&out), "--backend", "bogus"],
        vec!["label", "--algo", "baseline", "--corpus", &corpus, "--out", s(&out)],
        vec!["label", "--algo", "sideways", "--corpus", &corpus, "--out", s(&out)],
        vec!["label", "--algo", "moving", "--corpus", "/nonexistent.jsonl", "--out", s(&out)],
    ] {
        let o = bin(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.exists(), "{args:?} left output behind");
    }
}

#[test]
fn evaluate_reports_and_rejects_unknown_gestures() {
    let dir = TempDir::new().unwrap();
    let corpus = data("mini_corpus.jsonl");
    let pred = p(&dir, "pred.jsonl");
    assert_eq!(code(&bin(&["label", "--algo", "moving", "--corpus", &corpus, "--out", s(&pred)])), 0);

    let report = p(&dir, "report.json");
    let csv = p(&dir, "report.csv");
    let o = bin(&[
        "evaluate", "--pred", s(&pred), "--gt", &data("mini_gt.jsonl"), "--corpus", &corpus, "--out",
        s(&report), "--csv", s(&csv),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&report);
    assert_eq!(r["per_gesture"].as_object().unwrap().len(), 12);
    assert!(r["mean_ap"].is_number());
    assert!(r["backend_calls"]["distinct"].as_u64().unwrap() > 0);
    assert!(std::fs::read_to_string(&csv).unwrap().lines().count() > 12);

    let bad = p(&dir, "bad.jsonl");
    let mut text = std::fs::read_to_string(data("mini_gt.jsonl")).unwrap();
    text.push_str(
        &json!({"sentence_id": "m01", "gesture_id": "wave_hands", "start": 0, "len": 1, "score": 1.0,
                "source": "ground_truth"})
        .to_string(),
    );
    text.push('\n');
    std::fs::write(&bad, text).unwrap();
    let o = bin(&["evaluate", "--pred", s(&pred), "--gt", s(&bad), "--corpus", &corpus, "--out", s(&report)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("wave_hands"));
    assert!(!report.exists());

    let o = bin(&["evaluate", "--pred", s(&bad), "--gt", &data("mini_gt.jsonl"), "--corpus", &corpus, "--out", s(&report)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("wave_hands"));
}

#[test]
fn stats_round_trip_and_empty_gt() {
    let dir = TempDir::new().unwrap();
    let corpus = data("mini_corpus.jsonl");
    let stats = p(&dir, "stats.json");
    let o = bin(&["stats", "--gt", &data("mini_gt.jsonl"), "--corpus", &corpus, "--out", s(&stats)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let st = read_json(&stats);
    let total: f64 = st["gesture_probs"].as_object().unwrap().values().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);

    let out = p(&dir, "base.jsonl");
    let o = bin(&["label", "--algo", "baseline", "--stats", s(&stats), "--corpus", &corpus, "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_json(&manifest_path(&out))["backend_calls"]["backend_calls"], 0);

    let empty = p(&dir, "empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let o = bin(&["stats", "--gt", s(&empty), "--corpus", &corpus, "--out", s(&stats)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn scripted_backend_from_file() {
    let dir = TempDir::new().unwrap();
    let corpus = p(&dir, "c.jsonl");
    std::fs::write(&corpus, "{\"id\":\"s1\",\"text\":\"Hey I'm so sorry\"}\n").unwrap();
    let script = p(&dir, "script.json");
    std::fs::write(
        &script,
        json!({"default": 0.0, "entries": [
            {"reference": "Hey", "candidate": "Hey", "score": 0.9},
            {"reference": "I'm so sorry", "candidate": "I'm so sorry", "score": 0.85}
        ]})
        .to_string(),
    )
    .unwrap();
    let out = p(&dir, "out.jsonl");
    let backend = format!("scripted:{}", s(&script));
    let o = bin(&["label", "--algo", "moving", "--th1", "1", "--backend", &backend, "--corpus", s(&corpus), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let labels = gesture_labeler::io::load_labels(&out).unwrap();
    let got: Vec<_> = labels.iter().map(|l| (l.gesture_id.as_str(), l.start, l.len)).collect();
    assert_eq!(got, vec![("greeting", 0, 1), ("i_apologize", 1, 3)]);
}

#[test]
fn backend_failure_exits_3_and_removes_output() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "remote.jsonl");
    std::fs::write(&out, "stale").unwrap();
    let server = MockScoringServer::start_with("down", |_| (StatusCode::SERVICE_UNAVAILABLE, json!({}))).unwrap();
    let backend = format!("remote:{}", server.url());
    let o = bin(&[
        "label", "--algo", "moving", "--backend", &backend, "--retries", "0", "--corpus",
        &data("mini_corpus.jsonl"), "--out", s(&out),
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
    assert!(!manifest_path(&out).exists());
}

#[test]
fn remote_backend_matches_local_jaccard() {
    let dir = TempDir::new().unwrap();
    let server = MockScoringServer::start(std::sync::Arc::new(JaccardBackend)).unwrap();
    let local = p(&dir, "local.jsonl");
    let remote = p(&dir, "remote.jsonl");
    let corpus = data("mini_corpus.jsonl");
    assert_eq!(code(&bin(&["label", "--algo", "moving", "--corpus", &corpus, "--out", s(&local)])), 0);
    let backend = format!("remote:{}", server.url());
    let o = bin(&["label", "--algo", "moving", "--backend", &backend, "--corpus", &corpus, "--out", s(&remote)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&local).unwrap(), std::fs::read(&remote).unwrap());
}

#[test]
fn help_exits_0() {
    let o = bin(&["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["label", "calibrate", "evaluate", "stats", "serve"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn serve_on_a_taken_port_exits_3() {
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let dir = TempDir::new().unwrap();
    let gt = p(&dir, "gt.jsonl");
    let o = bin(&["serve", "--port", &port, "--corpus", &data("mini_corpus.jsonl"), "--gt-out", s(&gt)]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}
