//! End-to-end invocations of the `vessel` binary: artifacts, exit codes
//! and the CSV schema.

use std::path::Path;
use std::process::{Command, Output};

use vessel_core::record::CSV_HEADER;

fn vessel(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vessel"))
        .args(args)
        .env("VESSEL_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn validate_bundled_scenario_warns_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = vessel(&["validate", "paper-monohull"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("a1    = 1.42"), "{text}");
    assert!(text.contains("b1 = 4.44"), "{text}");
    assert!(text.contains("[WARN] U1 >"), "{text}");
    assert!(text.contains("[pass] a1 > U1 + rho"), "{text}");
}

#[test]
fn validate_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.toml");
    let out = vessel(
        &[
            "validate",
            "monohull-fast",
            "--out",
            report.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(report).unwrap();
    assert!(text.contains("schema = \"vessel-report-v1\""));
    assert!(text.contains("[c1]"));
}

#[test]
fn infeasible_gains_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("bad.toml");
    let text = include_str!("../../../scenarios/monohull-fast.toml")
        .replace("[gains]\nu1 = 0.4", "[gains]\nu1 = 0.4\nk2 = 0.5");
    std::fs::write(&scenario, text).unwrap();
    let out = vessel(&["validate", scenario.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("k2 - 1 > 0"));
}

#[test]
fn empty_scenario_file_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("empty.toml");
    std::fs::write(&scenario, "").unwrap();
    let out = vessel(&["validate", scenario.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("parse"), "{}", stderr(&out));
}

#[test]
fn run_produces_csv_and_six_figures() {
    let dir = tempfile::tempdir().unwrap();
    let out = vessel(
        &[
            "run",
            "monohull-fast",
            "--csv",
            "--plots",
            "--horizon",
            "40",
            "--stride",
            "20",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let base = dir.path().join("monohull-fast");
    let csv = base.join("run.csv");
    assert!(csv.is_file());
    for figure in [
        "plan.svg",
        "errors_xy.svg",
        "errors_uv.svg",
        "errors_psir.svg",
        "tau1.svg",
        "tau2.svg",
    ] {
        let path = base.join(figure);
        assert!(path.is_file(), "missing {figure}");
        let svg = std::fs::read_to_string(path).unwrap();
        assert!(svg.contains("<svg"), "{figure} is not an svg");
    }

    // Exact column set and order.
    let text = std::fs::read_to_string(csv).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, CSV_HEADER.join(","));
}

#[test]
fn run_without_plots_writes_csv_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = vessel(
        &["run", "monohull-fast", "--horizon", "5", "--stride", "50"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let base = dir.path().join("monohull-fast");
    assert!(base.join("run.csv").is_file());
    assert!(!base.join("plan.svg").exists());
}

#[test]
fn harness_mode_rejects_nonpositive_lambda_by_flag_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = vessel(
        &[
            "run",
            "monohull-fast",
            "--mode",
            "output-harness",
            "--lambda",
            "-0.5",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--lambda"), "{}", stderr(&out));
}

#[test]
fn divergent_run_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = vessel(
        &["run", "monohull-fast", "--step", "5", "--horizon", "50"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("diverged"));
}

#[test]
fn sweep_writes_summary_and_per_run_csv() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.toml");
    std::fs::write(
        &grid,
        "schema = \"vessel-sweep-v1\"\nkind = \"grid\"\n\n[[axis]]\nparam = \"k1\"\nvalues = [10.0, 12.0]\n\n[[axis]]\nparam = \"k2\"\nvalues = [10.0, 0.5]\n",
    )
    .unwrap();
    let scenario = dir.path().join("short.toml");
    std::fs::write(
        &scenario,
        include_str!("../../../scenarios/monohull-fast.toml")
            .replace("horizon = 300.0", "horizon = 8.0")
            .replace("record_stride = 10", "record_stride = 100"),
    )
    .unwrap();

    let out = vessel(
        &["sweep", scenario.to_str().unwrap(), grid.to_str().unwrap()],
        dir.path(),
    );
    // Mixed valid/invalid grids still exit zero; invalid rows are rejected.
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("rejected"), "{text}");

    let base = dir.path().join("monohull-fast-sweep");
    let summary = std::fs::read_to_string(base.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "run_id,terminal_error_norm,sat_exit_time,status"
    );
    assert_eq!(summary.matches("rejected").count(), 2);
    assert!(base.join("run_000.csv").is_file());
    assert!(
        !base.join("run_001.csv").exists(),
        "rejected run has no csv"
    );
}

#[test]
fn one_point_sweep_matches_plain_run() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("short.toml");
    std::fs::write(
        &scenario,
        include_str!("../../../scenarios/monohull-fast.toml")
            .replace("horizon = 300.0", "horizon = 6.0"),
    )
    .unwrap();
    let grid = dir.path().join("grid.toml");
    std::fs::write(
        &grid,
        "schema = \"vessel-sweep-v1\"\nkind = \"grid\"\n\n[[axis]]\nparam = \"k1\"\nvalues = [10.0]\n",
    )
    .unwrap();

    let sweep_out = vessel(
        &["sweep", scenario.to_str().unwrap(), grid.to_str().unwrap()],
        dir.path(),
    );
    assert!(sweep_out.status.success(), "{}", stderr(&sweep_out));
    let run_out = vessel(&["run", scenario.to_str().unwrap()], dir.path());
    assert!(run_out.status.success(), "{}", stderr(&run_out));

    let sweep_csv =
        std::fs::read_to_string(dir.path().join("monohull-fast-sweep/run_000.csv")).unwrap();
    let run_csv = std::fs::read_to_string(dir.path().join("monohull-fast/run.csv")).unwrap();
    assert_eq!(sweep_csv, run_csv);
}
