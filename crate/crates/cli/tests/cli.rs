use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hevote(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hevote"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(rel)
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn certify_reports_json_and_exit_status() {
    let ok = hevote(&["certify", "--dg", "5", "--grid", "100000"]);
    assert_eq!(code(&ok), 0);
    let cert = stdout_json(&ok);
    assert_eq!(cert["passed"], true);
    for key in ["alpha", "d_f", "d_g", "max_err"] {
        assert!(cert.get(key).is_some(), "missing {key}");
    }

    let coarse = hevote(&[
        "certify", "--df", "1", "--dg", "1", "--degree", "3", "--grid", "100000",
    ]);
    assert_eq!(code(&coarse), 2);
    assert_eq!(stdout_json(&coarse)["passed"], false);

    let alias = hevote(&["certify-sign", "--dg", "5", "--grid", "10000"]);
    assert_eq!(code(&alias), 0);
}

#[test]
fn certify_defaults_match_the_certifier() {
    // The two-by-two degree-9 composite does not reach the 1e-4 bound; the
    // exit status must agree with whatever the certificate says.
    let out = hevote(&["certify", "--grid", "1000000"]);
    let cert = stdout_json(&out);
    assert_eq!(cert["alpha"], 12);
    assert_eq!(
        (cert["d_f"].as_u64(), cert["d_g"].as_u64()),
        (Some(2), Some(2))
    );
    let expected = if cert["passed"] == true { 0 } else { 2 };
    assert_eq!(code(&out), expected);
}

#[test]
fn certify_usage_errors() {
    assert_eq!(code(&hevote(&["certify", "--grid", "9999"])), 1);
    assert_eq!(code(&hevote(&["certify", "--degree", "8"])), 1);
    assert_eq!(code(&hevote(&["certify", "--alpha", "x"])), 1);
    assert_eq!(code(&hevote(&["frobnicate"])), 1);
    assert_eq!(code(&hevote(&["--help"])), 0);
}

#[test]
fn vote_sample_matches_bundled_labels() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let cost = dir.path().join("cost.json");
    let run = hevote(&[
        "vote",
        "--logits",
        data("sample_batch.json").to_str().unwrap(),
        "--config",
        data("vote.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--cost-out",
        cost.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let expected: Vec<usize> =
        serde_json::from_str(&std::fs::read_to_string(data("sample_labels.json")).unwrap())
            .unwrap();
    let lines = std::fs::read_to_string(&out).unwrap();
    let labels: Vec<usize> = lines
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["label"]
                .as_u64()
                .unwrap() as usize
        })
        .collect();
    assert_eq!(labels, expected);

    let breakdown: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&cost).unwrap()).unwrap();
    let part = |k: &str| breakdown[k].as_f64().unwrap();
    assert!((part("aggregate") + part("argmax") + part("other") - part("total")).abs() < 1e-9);
    assert!(part("argmax") > part("aggregate"));
}

#[test]
fn vote_empty_and_invalid_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"m":2,"n":3,"d_min":0,"d_max":1,"examples":[]}"#).unwrap();
    let out = dir.path().join("r.jsonl");
    let run = hevote(&[
        "vote",
        "--logits",
        empty.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "");

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"m":1,"n":2,"d_min":0,"d_max":1,"examples":[{"id":"fine","logits":[[0.1,0.2]]},{"id":"q-17","logits":[[0.1,4.0]]}]}"#,
    )
    .unwrap();
    let run = hevote(&["vote", "--logits", bad.to_str().unwrap()]);
    assert_eq!(code(&run), 1);
    assert!(String::from_utf8_lossy(&run.stderr).contains("q-17"));

    let missing = hevote(&["vote", "--logits", "/nonexistent/x.json"]);
    assert_eq!(code(&missing), 1);
}

#[test]
fn bench_is_deterministic_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let run = hevote(&[
            "bench",
            "--dims",
            "4,256",
            "--method",
            "secpe,phoenix",
            "--backend",
            "exact",
            "--seed",
            "9",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    }
    let csv = std::fs::read_to_string(&a).unwrap();
    assert_eq!(csv, std::fs::read_to_string(&b).unwrap());

    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("method,n,backend,sign_ops,rotations,mults,bootstraps,modeled_cost,wall_ms")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let find = |m: &str, n: &str| {
        rows.iter()
            .find(|r| r[0] == m && r[1] == n)
            .unwrap()
            .clone()
    };
    assert_eq!(find("secpe", "256")[3], "9");
    let phoenix: u64 = find("phoenix", "256")[3].parse().unwrap();
    assert!((255..=257).contains(&phoenix));
    let cost = |r: Vec<&str>| r[7].parse::<f64>().unwrap();
    assert!(cost(find("phoenix", "256")) / cost(find("secpe", "256")) >= 10.0);
}

#[test]
fn bench_validation() {
    assert_eq!(
        code(&hevote(&[
            "bench",
            "--dims",
            "3",
            "--seed",
            "1",
            "--backend",
            "exact"
        ])),
        1
    );
    assert_eq!(
        code(&hevote(&["bench", "--dims", "65536", "--seed", "1"])),
        1
    );
    assert_eq!(
        code(&hevote(&["bench", "--dims", "4"])),
        1,
        "seed is required"
    );
    assert_eq!(
        code(&hevote(&[
            "bench", "--dims", "4", "--seed", "1", "--method", "fast"
        ])),
        1
    );
}
