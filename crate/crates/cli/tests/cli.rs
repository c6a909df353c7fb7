//! End-to-end checks through the public binary.

use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ramplaw"))
        .args(args)
        .env("RAMPLAW_OUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn pdf_summary_reports_the_p99_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "pdf",
            "--a-tilde",
            "0.9018",
            "--method",
            "analytic",
            "--terms",
            "100",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = read_json(&dir.path().join("pdf_summary.json"));
    let b99 = summary["percentiles"]["0.99"].as_f64().unwrap();
    assert!((b99 - 5.15).abs() < 0.02, "b99 {b99}");
    assert_eq!(summary["params"], "M=100");
}

/// The emitted table must re-integrate to unit mass: p0 plus a Simpson pass
/// over the density column plus the tabulated tail.
#[test]
fn pdf_csv_round_trips_to_unit_mass() {
    let dir = tempfile::tempdir().unwrap();
    for method in [
        &["--method", "analytic", "--terms", "80"][..],
        &["--method", "nystrom"][..],
    ] {
        let mut args = vec!["pdf", "--a-tilde", "0.9"];
        args.extend_from_slice(method);
        let out = run(dir.path(), &args);
        assert!(out.status.success());
        let rows = read_csv(&dir.path().join("pdf.csv"));
        assert_eq!(rows[0], ["b_tilde", "g", "G", "S"]);
        let b: Vec<f64> = rows[1..].iter().map(|r| r[0].parse().unwrap()).collect();
        let g: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
        let s_last: f64 = rows.last().unwrap()[3].parse().unwrap();
        let h = b[1] - b[0];
        assert!(g.len() % 2 == 1, "need an even panel count");
        let mut integral = g[0] + g[g.len() - 1];
        for (i, &gi) in g.iter().enumerate().take(g.len() - 1).skip(1) {
            integral += if i % 2 == 1 { 4.0 * gi } else { 2.0 * gi };
        }
        integral *= h / 3.0;
        let summary = read_json(&dir.path().join("pdf_summary.json"));
        let p0 = summary["p0"].as_f64().unwrap();
        let mass = p0 + integral + s_last;
        assert!((mass - 1.0).abs() < 1e-6, "total mass {mass}");
    }
}

#[test]
fn pdf_huge_slope_is_almost_all_point_mass() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["pdf", "--a-tilde", "10", "--method", "nystrom"],
    );
    assert!(out.status.success());
    let summary = read_json(&dir.path().join("pdf_summary.json"));
    assert!(summary["p0"].as_f64().unwrap() > 0.99);
}

#[test]
fn size_reproduces_the_three_term_sizing_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "size",
            "--a",
            "1.503",
            "--beta",
            "0.6",
            "--method",
            "analytic",
            "--terms",
            "2",
            "--safety-factor",
            "1.2",
            "--out",
            "size.csv",
            "--summary",
            "size.json",
        ],
    );
    assert!(out.status.success());
    let report = read_json(&dir.path().join("size.json"));
    let rows = report["rows"].as_array().unwrap();
    let capacities: Vec<f64> = rows
        .iter()
        .map(|r| r["capacity_mw"].as_f64().unwrap())
        .collect();
    for (got, want) in capacities.iter().zip([2.01, 3.42, 6.61]) {
        assert!((got - want).abs() < 0.02, "{got} vs {want}");
    }
    let with_safety = rows[2]["capacity_with_safety_mw"].as_f64().unwrap();
    assert!(
        (with_safety - 7.93).abs() < 0.03,
        "with safety {with_safety}"
    );
    let csv = read_csv(&dir.path().join("size.csv"));
    assert_eq!(
        csv[0],
        [
            "percentile",
            "b_tilde",
            "capacity_mw",
            "capacity_with_safety_mw",
            "note"
        ]
    );
}

#[test]
fn compare_law_with_itself_is_exactly_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "compare",
            "--a-tilde",
            "0.9",
            "--methods",
            "analytic:50,analytic:50",
        ],
    );
    assert!(out.status.success());
    let report = read_json(&dir.path().join("compare.json"));
    let d = report["comparisons"][0]["report"]["d_l1"].as_f64().unwrap();
    assert_eq!(d, 0.0);
}

#[test]
fn compare_validates_the_solvers_against_each_other() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "compare",
            "--a-tilde",
            "0.9",
            "--methods",
            "analytic:100,nystrom:1000",
        ],
    );
    assert!(out.status.success());
    let report = read_json(&dir.path().join("compare.json"));
    let d = report["comparisons"][0]["report"]["d_l1"].as_f64().unwrap();
    assert!(d <= 0.01, "d_l1 {d}");
    for run in report["runs"].as_array().unwrap() {
        assert!(run["runtime_seconds"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn compare_accepts_a_simulation_method() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "compare",
            "--a-tilde",
            "0.9",
            "--methods",
            "analytic:100,simulate:400000",
            "--seed",
            "9",
            "--burn-in",
            "1000",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = read_json(&dir.path().join("compare.json"));
    let d = report["comparisons"][0]["report"]["d_l1"].as_f64().unwrap();
    assert!(d < 0.05, "d_l1 {d}");
    assert_eq!(report["runs"][1]["method"], "simulate");
}

#[test]
fn sweep_produces_a_monotone_sizing_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "sweep",
            "--a-tilde-list",
            "0.5:2.5:0.5",
            "--methods",
            "analytic:100",
            "--jobs",
            "2",
        ],
    );
    assert!(out.status.success());
    let rows = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(rows[0], ["a_tilde", "b99", "method", "params"]);
    let b99: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(b99.len(), 5);
    for w in b99.windows(2) {
        assert!(w[1] < w[0], "curve not decreasing: {b99:?}");
    }
}

#[test]
fn pdf_backed_by_the_simulator_tabulates_the_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "pdf",
            "--a-tilde",
            "0.9",
            "--method",
            "simulate",
            "--steps",
            "300000",
            "--seed",
            "5",
            "--burn-in",
            "1000",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = read_json(&dir.path().join("pdf_summary.json"));
    let p0 = summary["p0"].as_f64().unwrap();
    assert!((p0 - 0.675).abs() < 0.01, "p0 {p0}");
    assert!(summary["params"]
        .as_str()
        .unwrap()
        .starts_with("steps=300000"));
}

#[test]
fn sweep_runs_simulations_on_offset_streams() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "sweep",
            "--a-tilde-list",
            "0.9,1.8",
            "--methods",
            "simulate:200000",
            "--seed",
            "40",
            "--burn-in",
            "1000",
            "--jobs",
            "2",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 3);
    // replica offsets show up in the recorded params
    let params: Vec<&str> = rows[1..].iter().map(|r| r[3].as_str()).collect();
    assert!(params.iter().any(|p| p.contains("seed=40")));
    assert!(params.iter().any(|p| p.contains("seed=41")));
    let b99: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(
        b99[0] > b99[1],
        "stricter slope needs more capacity: {b99:?}"
    );
}

#[test]
fn simulate_exports_law_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = run(
        dir.path(),
        &[
            "simulate",
            "--a-tilde",
            "0.9",
            "--steps",
            "50000",
            "--burn-in",
            "1000",
            "--seed",
            "3",
            "--trace",
            trace.to_str().unwrap(),
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = read_json(&dir.path().join("simulate_summary.json"));
    assert!(summary["zero_fraction"].as_f64().unwrap() > 0.5);
    assert!(summary["violation_rates"]["controlled"].as_f64().unwrap() > 0.0);
    let rows = read_csv(&trace);
    assert_eq!(rows[0], ["n", "P", "B", "R"]);
    assert_eq!(rows.len(), 50_002); // header + steps + initial state
                                    // law CSV mass check: zero_fraction + sum(density) * width = 1
    let law = read_csv(&dir.path().join("law.csv"));
    assert_eq!(law[0], ["bin_left", "density"]);
    let width = summary["bin_width"].as_f64().unwrap();
    let mass: f64 = law[1..]
        .iter()
        .map(|r| r[1].parse::<f64>().unwrap() * width)
        .sum::<f64>()
        + summary["zero_fraction"].as_f64().unwrap();
    assert!((mass - 1.0).abs() < 1e-9, "mass {mass}");
}

#[test]
fn config_file_feeds_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "a_tilde = 0.5\nterms = 10\n").unwrap();

    let out = run(dir.path(), &["pdf", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    let summary = read_json(&dir.path().join("pdf_summary.json"));
    assert_eq!(summary["a_tilde"].as_f64().unwrap(), 0.5);
    assert_eq!(summary["params"], "M=10");

    let out = run(
        dir.path(),
        &[
            "pdf",
            "--config",
            config.to_str().unwrap(),
            "--a-tilde",
            "0.9",
            "--terms",
            "4",
        ],
    );
    assert!(out.status.success());
    let summary = read_json(&dir.path().join("pdf_summary.json"));
    assert_eq!(summary["a_tilde"].as_f64().unwrap(), 0.9);
    assert_eq!(summary["params"], "M=4");
}

#[test]
fn conflicting_slope_flags_fail_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["pdf", "--a-tilde", "0.9", "--a", "1.5", "--beta", "0.6"],
    );
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    let err: serde_json::Value = serde_json::from_str(stderr.trim()).expect("stderr is JSON");
    assert!(err["error"].as_str().unwrap().contains("exactly one"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "a_tilde = 0.5\nnot_a_key = 1\n").unwrap();
    let out = run(dir.path(), &["pdf", "--config", config.to_str().unwrap()]);
    assert!(!out.status.success());
}
