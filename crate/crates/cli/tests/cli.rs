use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};

const STATS: &str = "class Stats {
    static double sd(int[] items) {
        int total = 0;
        for (int i = 0; i < items.length; i++) {
            total += items[i];
        }
        double mean = total / (double) items.length;
        double sq = 0;
        for (int i = 0; i < items.length; i++) {
            sq += (items[i] - mean) * (items[i] - mean);
        }
        return Math.sqrt(sq / items.length);
    }
}
";

const QUESTION_CODE: &str = "int total = 0;
for (int i = 0; i < items.length; i++) {
    total += items[i];
}
double mean = total / (double) items.length;
double sq = 0;
for (int i = 0; i < items.length; i++) {
    sq += (items[i] - mean) * (items[i] - mean);
}";

fn postforge(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_postforge"))
        .args(args)
        .env("POSTFORGE_LOG", "warn")
        .output()
        .unwrap();
    (
        out.status.success(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn ok(args: &[&str]) -> Value {
    let (success, stdout, stderr) = postforge(args);
    assert!(success, "{args:?}\n{stderr}");
    serde_json::from_str(&stdout).unwrap_or(Value::String(stdout))
}

/// Sixty posts; even ids are deficient (unanswered, negative score).
fn write_inputs(dir: &Path) {
    let mut dump = String::new();
    let mut votes = String::new();
    for i in 1..=60u64 {
        let deficient = i % 2 == 0;
        let answers = if deficient {
            json!([])
        } else {
            json!([{ "answer_id": i * 100, "score": 3 + i as i64 % 5, "comment_count": 1, "answerer_reputation": 500 + i, "body": "<p>try this</p>" }])
        };
        let q = json!({
            "question_id": i,
            "title": format!("How to compute the spread of items {i}"),
            "body": format!("<p>Question {i}</p><pre><code>{QUESTION_CODE}</code></pre>"),
            "tags": ["java"],
            "creation_date": "2022-01-01T00:00:00Z",
            "last_activity_date": "2023-01-01T00:00:00Z",
            "score": if deficient { -1 } else { 4 },
            "view_count": 100 + 7 * i,
            "comment_count": i % 3,
            "accepted_answer_id": if deficient { Value::Null } else { json!(i * 100) },
            "answers": answers,
            "asker_reputation": 10 + i,
            "as_of": "2024-01-01T00:00:00Z",
        });
        dump.push_str(&q.to_string());
        dump.push('\n');
        let label = if deficient { "YES" } else { "NO" };
        votes.push_str(&json!({ "question_id": i, "votes": [label, label, label] }).to_string());
        votes.push('\n');
    }
    dump.push_str("{not json\n");
    std::fs::write(dir.join("dump.jsonl"), dump).unwrap();
    std::fs::write(dir.join("votes.jsonl"), votes).unwrap();
    std::fs::create_dir_all(dir.join("src")).unwrap();
    std::fs::write(dir.join("src/Stats.java"), STATS).unwrap();
    std::fs::write(
        dir.join("profile.json"),
        json!({ "top_tags": ["java"], "max_suggestions_per_day": 1 }).to_string(),
    )
    .unwrap();
}

#[test]
fn end_to_end_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write_inputs(d);
    let p = |name: &str| d.join(name).to_string_lossy().into_owned();

    let report = ok(&["ingest", "--store", &p("store"), "--dump", &p("dump.jsonl"), "--tag", "java"]);
    assert_eq!(report["stored"], 60);
    assert_eq!(report["malformed"].as_array().unwrap().len(), 1);

    let built = ok(&["features", "--store", &p("store"), "--votes", &p("votes.jsonl"), "--out", &p("dataset.jsonl"), "--summary", &p("summary.tsv")]);
    assert_eq!(built["labeled"], 60);
    assert!(std::fs::read_to_string(d.join("summary.tsv")).unwrap().lines().count() > 1);

    let trained = ok(&["train", "--dataset", &p("dataset.jsonl"), "--model", "dt", "--out", &p("model.json"), "--test-out", &p("test.jsonl")]);
    assert_eq!(trained["train"].as_u64().unwrap() + trained["test"].as_u64().unwrap(), 60);
    assert!(trained["tuning"]["cp_trace"].is_array());
    assert_eq!(trained["test_metrics"]["f1"], 1.0);

    let metrics = ok(&["eval", "--model", &p("model.json"), "--dataset", &p("test.jsonl")]);
    assert_eq!(metrics["recall"], 1.0);

    let fixed = ok(&["train", "--dataset", &p("dataset.jsonl"), "--model", "dt", "--cp", "0.012", "--out", &p("dt.json")]);
    assert!(fixed["tuning"].as_object().unwrap().is_empty());
    ok(&["train", "--dataset", &p("dataset.jsonl"), "--model", "mlp", "--hidden", "4", "--out", &p("mlp.json")]);
    ok(&["train", "--dataset", &p("dataset.jsonl"), "--model", "svm", "--gamma", "0.03125", "--cost", "4", "--out", &p("svm.json")]);
    for m in ["mlp.json", "svm.json"] {
        let metrics = ok(&["eval", "--model", &p(m), "--dataset", &p("dataset.jsonl")]);
        assert!(metrics["accuracy"].as_f64().unwrap() > 0.9, "{m}: {metrics}");
    }

    let subset = ok(&["select", "--dataset", &p("dataset.jsonl"), "--method", "rfe", "--folds", "5"]);
    assert!(!subset["selected"].as_array().unwrap().is_empty());

    let snippet = ok(&["draft", "--store", &p("store"), "--question", "2", "--corpus", &p("src"), "--snippet"]);
    let snippet = snippet.as_str().unwrap();
    assert!(snippet.contains("sq += (items[i] - mean)"), "{snippet}");
    assert!(snippet.starts_with("int total = 0;"), "{snippet}");

    let outcome = ok(&[
        "suggest", "--store", &p("store"), "--context", &p("src"), "--profile", &p("profile.json"),
        "--model", &p("model.json"), "--now", "2024-06-01",
    ]);
    assert_eq!(outcome["outcome"], "assigned", "{outcome}");
    assert_eq!(outcome["candidate"]["question_id"].as_u64().unwrap() % 2, 0);
    let fresh = ok(&[
        "suggest", "--store", &p("store"), "--context", &p("src"), "--profile", &p("profile.json"),
        "--model", &p("model.json"), "--now", "2023-02-01",
    ]);
    assert_eq!(fresh["reason"], "staleness");
}

#[test]
fn bad_input_fails_cleanly() {
    let (success, _, stderr) = postforge(&["eval", "--model", "/nonexistent/model.json", "--dataset", "/nonexistent/d.jsonl"]);
    assert!(!success);
    assert!(stderr.contains("nonexistent"), "{stderr}");
    let (success, _, stderr) = postforge(&["suggest", "--store", "x", "--context", "y", "--profile", "z", "--model", "m", "--weights", "1,1,1"]);
    assert!(!success);
    assert!(stderr.contains("weights"), "{stderr}");
}

#[test]
fn serve_refuses_live_without_config_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write_inputs(d);
    let p = |name: &str| d.join(name).to_string_lossy().into_owned();
    ok(&["ingest", "--store", &p("store"), "--dump", &p("dump.jsonl")]);
    ok(&["features", "--store", &p("store"), "--votes", &p("votes.jsonl"), "--out", &p("dataset.jsonl")]);
    ok(&["train", "--dataset", &p("dataset.jsonl"), "--cp", "0.012", "--out", &p("model.json")]);
    std::fs::write(d.join("pf.conf"), "store = store\nmodel = model.json\nprofile = profile.json\ncontext = src\n").unwrap();
    let (success, _, stderr) = postforge(&["serve", "--config", &p("pf.conf"), "--live", "--port", "0"]);
    assert!(!success);
    assert!(stderr.contains("dry_run = false"), "{stderr}");
}
