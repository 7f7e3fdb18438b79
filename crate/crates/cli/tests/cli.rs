use std::path::Path;
use std::process::{Command, Output};

fn ragbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ragbench"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("spawn ragbench")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_experiment(dir: &Path) -> std::path::PathBuf {
    let mut mcqs = String::new();
    let mut corpus = String::new();
    for i in 0..8 {
        let item = serde_json::json!({
            "id": format!("q{i}"),
            "category": if i % 2 == 0 { "AKI" } else { "CKD" },
            "case": format!("patient with marker{i} findings"),
            "question": "Which treatment?",
            "options": {"A": format!("alpha-{i}"), "B": format!("beta-{i}"), "C": format!("gamma-{i}")},
            "gold": "B",
        });
        mcqs.push_str(&item.to_string());
        mcqs.push('\n');
        corpus.push_str(&format!("marker{i} responds to beta-{i} therapy\n"));
    }
    std::fs::write(dir.join("mcq.jsonl"), mcqs).unwrap();
    std::fs::write(dir.join("notes.txt"), corpus).unwrap();
    std::fs::write(dir.join("terms.txt"), "marker0\ntherapy\nkidney\n").unwrap();
    let cfg = dir.join("experiment.toml");
    std::fs::write(
        &cfg,
        r#"
mcq_path = "mcq.jsonl"
output_dir = "out"
term_set_path = "terms.txt"
trials = 2
chunk_size = 5
seed = 5

[corpora]
notes = "notes.txt"
noise = { random_words = 40, seed = 1 }

[endpoint]
backend = "mock"
context_aware = true
"#,
    )
    .unwrap();
    cfg
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_experiment(dir.path());
    let cfg = cfg.to_str().unwrap();
    let o = ragbench(&["run", "--config", cfg, "--timestamp", "2024-01-01T00:00:00Z", "--parallelism", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("6 record files written"), "{}", stdout(&o));
    let first = std::fs::read(dir.path().join("out/notes.trial1.jsonl")).unwrap();

    let again = ragbench(&["run", "--config", cfg, "--timestamp", "2024-01-01T00:00:00Z"]);
    assert!(stdout(&again).contains("0 record files written, 6 already complete"));

    let o = ragbench(&["report", "--config", cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("| notes | 100.0 | 0.00 |"), "{}", stdout(&o));
    for f in ["summary.csv", "summary.md", "stats.json", "subcategories/aki.md", "subcategories/ckd.csv"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }

    // a different seed is a different experiment
    let o = ragbench(&["run", "--config", cfg, "--seed", "6"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(std::fs::read(dir.path().join("out/notes.trial1.jsonl")).unwrap(), first);
}

#[test]
fn invalid_config_lists_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "mcq_path = 'missing.jsonl'\noutput_dir = 'o'\ntrials = 0\n[endpoint]\nbackend = 'mock'\n",
    )
    .unwrap();
    let o = ragbench(&["run", "--config", cfg.to_str().unwrap(), "--parallelism", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("trials must be at least 1"), "{err}");
    assert!(err.contains("parallelism must be at least 1"));
    assert!(err.contains("missing.jsonl"));
}

#[test]
fn index_and_query() {
    let dir = tempfile::tempdir().unwrap();
    write_experiment(dir.path());
    let idx = dir.path().join("notes.idx");
    let o = ragbench(&[
        "index",
        "--corpus",
        dir.path().join("notes.txt").to_str().unwrap(),
        "--chunk-size",
        "5",
        "--out",
        idx.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("notes: 8 chunks"));
    let o = ragbench(&["query", "--index", idx.to_str().unwrap(), "-k", "1", "marker3"]);
    assert!(stdout(&o).starts_with("3\t"), "{}", stdout(&o));

    let cfg = dir.path().join("experiment.toml");
    let out = dir.path().join("indices");
    let o = ragbench(&["index", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(out.join("notes.idx").exists() && out.join("noise.idx").exists());
}

#[test]
fn analyze_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_experiment(dir.path());
    let o = ragbench(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("corpus,"));
    // notes has 2 of the 3 terms
    assert!(lines.iter().any(|l| l.starts_with("notes,2,66.7,")), "{csv}");
}

#[test]
fn extract_test_and_random_words() {
    let o = ragbench(&["extract-test"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("38/38"), "{}", stdout(&o));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("cases.jsonl");
    std::fs::write(&bad, "{\"output\": \"The answer is B.\", \"expected\": \"C\"}\n").unwrap();
    let o = ragbench(&["extract-test", "--corpus", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("0/1"));

    let a = ragbench(&["random-words", "--count", "25", "--seed", "9"]);
    let b = ragbench(&["random-words", "--count", "25", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).split_whitespace().count(), 25);
}
