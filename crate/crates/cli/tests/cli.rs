use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proxbounds::dgp::draw_dataset;
use proxbounds::{estimate, Dataset, FrequencyModel, JointPmf};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proxbounds"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Writes a sample from the confounder fixture plus its codebook.
fn dataset(dir: &Path, n: usize, seed: u64) -> (PathBuf, PathBuf, Dataset) {
    let joint = JointPmf::from_json_file(fixture("conf_small.json")).unwrap();
    let data = draw_dataset(&joint, n, seed).unwrap();
    let csv = dir.join("data.csv");
    let cb = dir.join("codebook.json");
    fs::write(&csv, data.to_csv_string()).unwrap();
    fs::write(&cb, serde_json::to_string(data.codebook()).unwrap()).unwrap();
    (csv, cb, data)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_study(dir: &Path) -> PathBuf {
    let path = dir.join("study.json");
    fs::write(
        &path,
        r#"{"family": "confounder", "grid": [{"u": 2, "x": 2, "w": 2, "z": 2, "y": 3}],
            "n": [300, 600], "replications": 2, "B": 10, "seed": 4,
            "methods": ["W", "Z", "WZ"], "estimand": "ett-mean(0)"}"#,
    )
    .unwrap();
    path
}

#[test]
fn bounds_output_is_the_library_report() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, cb, data) = dataset(dir.path(), 800, 1);
    let text = ok(&[
        "bounds",
        "--data",
        s(&csv),
        "--codebook",
        s(&cb),
        "--method",
        "Z",
        "--estimand",
        "ate",
    ]);
    assert_eq!(
        text,
        ok(&[
            "bounds",
            "--data",
            s(&csv),
            "--codebook",
            s(&cb),
            "--method",
            "Z",
            "--estimand",
            "ate"
        ])
    );
    let v: Value = serde_json::from_str(&text).unwrap();
    let model = FrequencyModel::fit(&data, 0.0).unwrap();
    let lib = estimate(
        &model,
        "Z".parse().unwrap(),
        "ate".parse().unwrap(),
        Some(50.0),
    )
    .unwrap();
    assert_eq!(v["report"], serde_json::to_value(&lib).unwrap());
    assert_eq!(v["config"]["alpha"], 50.0);

    let hard: Value = serde_json::from_str(&ok(&[
        "bounds",
        "--joint",
        s(&fixture("conf_small.json")),
        "--method",
        "W",
        "--estimand",
        "ett-mean(1)",
        "--hard",
    ]))
    .unwrap();
    assert!(hard["report"]["alpha"].is_null());
    assert_eq!(hard["report"]["hard"], hard["report"]["smoothed"]);
}

#[test]
fn constant_treatment_proxy_gives_point_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cb, data) = dataset(dir.path(), 500, 2);
    let z = data.codebook().index_of("Z").unwrap();
    let records = data.records().iter().map(|r| {
        let mut r = r.clone();
        r[z] = 0;
        r
    });
    let flat = Dataset::new(data.codebook(), records.collect()).unwrap();
    let csv = dir.path().join("flat.csv");
    fs::write(&csv, flat.to_csv_string()).unwrap();
    let v: Value = serde_json::from_str(&ok(&[
        "bounds",
        "--data",
        s(&csv),
        "--codebook",
        s(&cb),
        "--method",
        "Z",
        "--estimand",
        "ett-mean(0)",
        "--hard",
    ]))
    .unwrap();
    assert_eq!(v["report"]["hard"]["lower"], v["report"]["hard"]["upper"]);
}

#[test]
fn ci_is_independent_of_workers_and_rerun_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, cb, _) = dataset(dir.path(), 600, 3);
    let reps = dir.path().join("reps.csv");
    let args = |w: &'static str| {
        vec![
            "ci",
            "--data",
            s(&csv),
            "--codebook",
            s(&cb),
            "--method",
            "W",
            "--estimand",
            "ett-mean(0)",
            "-B",
            "40",
            "--seed",
            "9",
            "--workers",
            w,
        ]
    };
    let one = ok(&args("1"));
    assert_eq!(one, ok(&args("1")));
    assert_eq!(one, ok(&args("8")));
    let mut with_csv = args("2");
    with_csv.extend(["--replicates-csv", s(&reps)]);
    assert_eq!(one, ok(&with_csv));
    assert_eq!(fs::read_to_string(&reps).unwrap().lines().count(), 41);
    let v: Value = serde_json::from_str(&one).unwrap();
    assert_eq!(v["report"]["B"], 40);
    assert_eq!(v["report"]["seed"], 9);
}

#[test]
fn study_is_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_study(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let out_a = ok(&[
        "study",
        "--config",
        s(&config),
        "--output",
        s(&a),
        "--workers",
        "1",
    ]);
    let out_b = ok(&[
        "study",
        "--config",
        s(&config),
        "--output",
        s(&b),
        "--workers",
        "8",
    ]);
    assert_eq!(out_a, out_b);
    for f in ["summary.csv", "replications.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    assert_eq!(out_a, fs::read_to_string(a.join("summary.csv")).unwrap());
    assert_eq!(out_a.lines().count(), 1 + 2 * 3);
    let first = fs::read(a.join("summary.json")).unwrap();
    ok(&[
        "study",
        "--config",
        s(&config),
        "--output",
        s(&a),
        "--workers",
        "3",
    ]);
    assert_eq!(first, fs::read(a.join("summary.json")).unwrap());
}

#[test]
fn simulate_writes_one_dataset_per_task() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_study(dir.path());
    let out = dir.path().join("sim");
    ok(&[
        "simulate",
        "--config",
        s(&config),
        "--output",
        s(&out),
        "--replications",
        "1",
        "--n",
        "1",
    ]);
    let data = fs::read_to_string(out.join("data_g0_r0_n1.csv")).unwrap();
    assert_eq!(data.lines().count(), 2);
    for f in [
        "spec_g0_r0.json",
        "truth_g0_r0.json",
        "codebook_g0_r0.json",
        "simulate.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let v: Value = serde_json::from_str(&ok(&[
        "bridge-check",
        "--spec",
        s(&out.join("spec_g0_r0.json")),
    ]))
    .unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
}

#[test]
fn bridge_check_reports_fixture_feasibility() {
    let v: Value = serde_json::from_str(&ok(&[
        "bridge-check",
        "--joint",
        s(&fixture("med_small.json")),
    ]))
    .unwrap();
    assert_eq!(v[0]["variant"], "mediation");
    assert_eq!(v[0]["overall_feasible"], true);
    let v: Value = serde_json::from_str(&ok(&[
        "bridge-check",
        "--joint",
        s(&fixture("conf_small.json")),
        "--kind",
        "treatment",
    ]))
    .unwrap();
    assert_eq!(v[0]["kind"], "treatment-q");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"family": "confounder", "unknown": true}"#).unwrap();
    assert_eq!(run(&["study", "--config", s(&bad)]).status.code(), Some(2));
    assert_eq!(
        run(&[
            "bounds",
            "--joint",
            s(&fixture("conf_small.json")),
            "--method",
            "Q",
            "--estimand",
            "ate"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        run(&[
            "bounds",
            "--joint",
            s(&fixture("conf_small.json")),
            "--method",
            "Z",
            "--estimand",
            "cross-world"
        ])
        .status
        .code(),
        Some(2)
    );

    let (_, cb, data) = dataset(dir.path(), 300, 5);
    let a = data.codebook().index_of("A").unwrap();
    let treated: Vec<Vec<usize>> = data
        .records()
        .iter()
        .filter(|r| r[a] == 1)
        .cloned()
        .collect();
    let one_arm = dir.path().join("one_arm.csv");
    fs::write(
        &one_arm,
        Dataset::new(data.codebook(), treated)
            .unwrap()
            .to_csv_string(),
    )
    .unwrap();
    let out = run(&[
        "bounds",
        "--data",
        s(&one_arm),
        "--codebook",
        s(&cb),
        "--method",
        "W",
        "--estimand",
        "ett-mean(1)",
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let missing = dir.path().join("nope.csv");
    assert_eq!(
        run(&[
            "bounds",
            "--data",
            s(&missing),
            "--codebook",
            s(&cb),
            "--method",
            "W",
            "--estimand",
            "ate"
        ])
        .status
        .code(),
        Some(4)
    );
    assert_eq!(
        run(&["study", "--config", s(&missing)]).status.code(),
        Some(4)
    );
}
