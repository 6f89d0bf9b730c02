//! Scenario-file schema: bundled files match the library constructors,
//! serialization round-trips exactly, and malformed input is rejected
//! with useful paths.

use vessel_cli::scenario::{load_scenario, ScenarioFile, BUNDLED};
use vessel_core::observer::ErrorShape;
use vessel_core::reference::{Interp, Signal};
use vessel_core::sim::{FeedbackMode, Scenario};

#[test]
fn bundled_files_match_library_constructors() {
    let paper = load_scenario("paper-monohull").unwrap();
    assert_eq!(paper, Scenario::paper_monohull());

    let fast = load_scenario("monohull-fast").unwrap();
    assert_eq!(fast, Scenario::monohull_fast());
}

#[test]
fn scenario_round_trips_through_toml() {
    let mut sc = Scenario::paper_monohull();
    sc.mode = FeedbackMode::OutputHarness {
        f0: 1.5,
        lambda: 0.25,
        shape: ErrorShape::Rotating { omega: 2.0 },
    };
    sc.rho = Some(0.5);
    sc.gains.k1 = Some(12.0);
    sc.reference_input.tau2 = Signal::Samples {
        times: vec![0.0, 100.0, 200.0],
        values: vec![0.05, 0.02, 0.05],
        interp: Interp::Step,
    };
    let text = ScenarioFile::from_scenario(&sc).to_toml().unwrap();
    let back = ScenarioFile::parse(&text).unwrap().to_scenario().unwrap();
    assert_eq!(back, sc);
}

#[test]
fn differentiator_mode_round_trips() {
    let mut sc = Scenario::monohull_fast();
    sc.mode = FeedbackMode::OutputDifferentiator { gain: 80.0 };
    let text = ScenarioFile::from_scenario(&sc).to_toml().unwrap();
    let back = ScenarioFile::parse(&text).unwrap().to_scenario().unwrap();
    assert_eq!(back, sc);
}

#[test]
fn unknown_keys_are_rejected() {
    let (_, text) = BUNDLED[0];
    let patched = text.replace("[sim]", "typo_key = 1\n\n[sim]");
    let err = ScenarioFile::parse(&patched).unwrap_err();
    assert!(format!("{err:#}").contains("typo_key"), "{err:#}");
}

#[test]
fn missing_required_key_reports_its_path() {
    let (_, text) = BUNDLED[0];
    let patched = text.replace("m3 = 636e5\n", "");
    let err = ScenarioFile::parse(&patched).unwrap_err();
    let msg = format!("{err:#}");
    assert!(msg.contains("m3"), "{msg}");
}

#[test]
fn schema_tag_is_enforced() {
    let (_, text) = BUNDLED[0];
    let patched = text.replace("vessel-scenario-v1", "vessel-scenario-v999");
    let err = ScenarioFile::parse(&patched).unwrap_err();
    assert!(format!("{err:#}").contains("schema mismatch"));
}

#[test]
fn bad_mode_kind_is_rejected() {
    let (_, text) = BUNDLED[0];
    let patched = format!("{text}\n[sim.mode]\nkind = \"teleport\"\n");
    let err = ScenarioFile::parse(&patched)
        .unwrap()
        .to_scenario()
        .unwrap_err();
    assert!(format!("{err:#}").contains("teleport"));
}

#[test]
fn report_lists_each_inequality_exactly_once() {
    let sc = load_scenario("paper-monohull").unwrap();
    let (report, _) = vessel_cli::report::build_report(&sc, None).unwrap();
    for name in [
        "a1 > U1 + rho",
        "U1 > |a1 - b1/c| rho / min(a1, b1/c)",
        "U2 > 0",
        "M > 0",
        "k1 > k2 - 1",
        "k2 - 1 > 0",
    ] {
        let hits = report.constraints.iter().filter(|c| c.name == name).count();
        assert_eq!(hits, 1, "{name} appears {hits} times");
    }
    // Numeric evaluations are present for every row.
    assert!(report.constraints.iter().all(|c| c.lhs.is_finite()));
}
