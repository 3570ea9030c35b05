//! End-to-end CLI tests: exit codes, the frozen run-report schema, and
//! bench determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pathtsp"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn solve_report_matches_golden_schema() {
    let out = run(&[
        "solve",
        "--input",
        fixture("tri.json").to_str().unwrap(),
        "--algorithm",
        "rdp",
        "--epsilon",
        "0.25",
    ]);
    let mut report = stdout_json(&out);
    // Wall time is the one nondeterministic field.
    report["stats"]["wall_ms"] = 0.into();
    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/solve_tri_rdp.json");
    let golden: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(golden_path).unwrap()).unwrap();
    assert_eq!(report, golden);
}

#[test]
fn solve_christofides_two_vertices() {
    let out = run(&[
        "solve",
        "--input",
        fixture("two.json").to_str().unwrap(),
        "--algorithm",
        "christofides",
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["algorithm"], "christofides");
    assert_eq!(report["tour"]["order"], serde_json::json!([0, 1]));
    assert_eq!(report["tour"]["cost"], 5.0);
    assert_eq!(report["epsilon"], serde_json::Value::Null);
}

#[test]
fn solve_exact_reports_unit_ratio() {
    let out = run(&[
        "solve",
        "--input",
        fixture("tri.json").to_str().unwrap(),
        "--algorithm",
        "exact",
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["algorithm"], "exact");
    assert_eq!(report["tour"]["cost"], 2.0);
    assert_eq!(report["ratio_vs_exact"], 1.0);
}

#[test]
fn solve_tsplib_with_fixed_endpoints() {
    let out = run(&[
        "solve",
        "--input",
        fixture("square.tsp").to_str().unwrap(),
        "--format",
        "tsplib",
        "--algorithm",
        "exact",
    ]);
    let report = stdout_json(&out);
    // Unit square with adjacent-corner endpoints: the optimum path walks
    // three sides, cost 3.
    assert_eq!(report["tour"]["cost"], 3.0);
}

#[test]
fn metric_violation_exits_one_with_triple() {
    let out = run(&[
        "solve",
        "--input",
        fixture("bad_metric.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("triangle inequality"), "stderr: {err}");
    assert!(err.contains("(0,1,2)"), "stderr: {err}");
}

#[test]
fn oracle_cap_exits_two() {
    let dir = std::env::temp_dir().join(format!("pathtsp-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let inst = pathtsp::gen_random(17, pathtsp::GenFamily::EuclideanUnitSquare, 1).unwrap();
    let path = dir.join("big.json");
    std::fs::write(&path, inst.to_json()).unwrap();
    let out = run(&[
        "solve",
        "--input",
        path.to_str().unwrap(),
        "--algorithm",
        "exact",
    ]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_passes_on_path_instance() {
    let out = run(&[
        "verify",
        "--input",
        fixture("tri.json").to_str().unwrap(),
        "--epsilon",
        "0.25",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("chain of lonely cuts: PASS"));
    assert!(text.contains("T-join polyhedron enumeration: PASS"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn verify_rational_mode_passes() {
    let out = run(&[
        "verify",
        "--n",
        "5",
        "--seed",
        "2",
        "--family",
        "random-metric-closure",
        "--rational",
    ]);
    assert!(
        out.status.success(),
        "stdout: {} stderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn bench_is_deterministic_and_bounded() {
    let args = [
        "bench",
        "--family",
        "euclidean-unit-square",
        "--n",
        "7",
        "--count",
        "5",
        "--seed",
        "900",
    ];
    let a = stdout_json(&run(&args));
    let b = stdout_json(&run(&args));
    let strip = |v: &serde_json::Value| {
        let mut rows = v.as_array().unwrap().clone();
        for row in rows.iter_mut() {
            row["wall_ms"] = 0.into();
        }
        rows
    };
    assert_eq!(strip(&a), strip(&b));
    for row in strip(&a) {
        assert!(row["rdp_ratio"].as_f64().unwrap() <= 1.6 * (1.0 + 1e-6));
        assert!(row["christofides_ratio"].as_f64().unwrap() <= 5.0 / 3.0 * (1.0 + 1e-6));
    }
}

#[test]
fn bench_csv_has_header_and_rows() {
    let out = run(&["bench", "--n", "6", "--count", "3", "--seed", "1", "--csv"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.trim().lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("seed,n,opt,"));
}

#[test]
fn trace_flag_writes_call_records() {
    let dir = std::env::temp_dir().join(format!("pathtsp-trace-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let trace = dir.join("trace.jsonl");
    let out = run(&[
        "solve",
        "--input",
        fixture("tri.json").to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&trace).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert!(first.get("level").is_some());
    assert!(first.get("lp_rows").is_some());
    std::fs::remove_dir_all(&dir).ok();
}
