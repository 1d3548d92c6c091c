use std::path::Path;
use std::process::{Command, Output};

use breachscan::ingest::{write_labeled, LabeledCandidate};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_breachscan"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is pure JSON")
}

/// Two raters' label files whose cross-tabulation is 184 / 16 / 13 / 187.
fn write_table_three(dir: &Path) -> (String, String) {
    let mut a = String::from("report_id,start,end,pattern_name,label\n");
    let mut b = a.clone();
    let cells = [
        (184, true, true),
        (16, true, false),
        (13, false, true),
        (187, false, false),
    ];
    let mut i = 0;
    for (count, l1, l2) in cells {
        for _ in 0..count {
            a.push_str(&format!("r{i},0,10,generic,{l1}\n"));
            b.push_str(&format!("r{i},0,10,generic,{l2}\n"));
            i += 1;
        }
    }
    let (pa, pb) = (dir.join("rater1.csv"), dir.join("rater2.csv"));
    std::fs::write(&pa, a).unwrap();
    std::fs::write(&pb, b).unwrap();
    (
        pa.to_str().unwrap().to_owned(),
        pb.to_str().unwrap().to_owned(),
    )
}

#[test]
fn kappa_reproduces_the_two_rater_table() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = write_table_three(dir.path());
    let v = stdout_json(&run(&["kappa", &a, &b]));
    let k = v["kappa"].as_f64().unwrap();
    assert!((k - 0.855).abs() < 1e-3, "{k}");
    assert_eq!(v["overlap"], 400);
    assert_eq!(v["disagreements"].as_array().unwrap().len(), 29);
}

#[test]
fn evaluate_perfect_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let labels: Vec<LabeledCandidate> = (0..6)
        .map(|i| LabeledCandidate {
            report_id: format!("r{i}"),
            candidate_text: "abc".into(),
            start: 0,
            end: 3,
            pattern_name: "p".into(),
            label: i % 2 == 0,
        })
        .collect();
    let path = dir.path().join("labels.jsonl");
    write_labeled(&labels, &path).unwrap();
    let p = path.to_str().unwrap();
    let v = stdout_json(&run(&[
        "evaluate",
        "--labels",
        p,
        "--predictions",
        p,
        "--beta",
        "1",
    ]));
    assert_eq!(v["metrics"]["f1"], 1.0);
    assert_eq!(v["metrics"]["precision"], 1.0);

    // --beta is mandatory.
    assert_eq!(
        run(&["evaluate", "--labels", p, "--predictions", p])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn usage_and_runtime_errors_have_distinct_codes() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert!(out.stdout.is_empty());
    assert_eq!(run(&["scan", "--bogus-flag", "x"]).status.code(), Some(2));
    assert_eq!(
        run(&["scan", "/nonexistent/reports.csv"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn generate_train_scan_sample_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let gen = stdout_json(&run(&[
        "generate",
        "--count",
        "60",
        "--seed",
        "3",
        "--reports",
        &p("r.csv"),
        "--labels",
        &p("l.jsonl"),
    ]));
    assert_eq!(gen["reports"], 60);

    let train = |out: &str| {
        stdout_json(&run(&[
            "train",
            "--reports",
            &p("r.csv"),
            "--labels",
            &p("l.jsonl"),
            "-o",
            out,
            "--epochs",
            "200",
            "--seed",
            "9",
        ]))
    };
    train(&p("m1.json"));
    train(&p("m2.json"));
    assert_eq!(
        std::fs::read(p("m1.json")).unwrap(),
        std::fs::read(p("m2.json")).unwrap()
    );

    let eval = stdout_json(&run(&[
        "evaluate",
        "--labels",
        &p("l.jsonl"),
        "--reports",
        &p("r.csv"),
        "--model",
        &p("m1.json"),
        "--beta",
        "2",
    ]));
    assert!(eval["metrics"]["recall"].as_f64().unwrap() > 0.5);
    let base = stdout_json(&run(&[
        "evaluate",
        "--labels",
        &p("l.jsonl"),
        "--regex-baseline",
        "--beta",
        "1",
    ]));
    assert_eq!(base["metrics"]["recall"], 1.0);

    let scan = stdout_json(&run(&["scan", &p("r.csv"), "--model", &p("m1.json")]));
    assert!(!scan.as_array().unwrap().is_empty());

    let sample = |out: &str| {
        stdout_json(&run(&[
            "sample",
            &p("r.csv"),
            "--fraction",
            "0.1",
            "--seed",
            "4",
            "-o",
            out,
        ]))
    };
    sample(&p("t1.csv"));
    sample(&p("t2.csv"));
    assert_eq!(
        std::fs::read(p("t1.csv")).unwrap(),
        std::fs::read(p("t2.csv")).unwrap()
    );
}
