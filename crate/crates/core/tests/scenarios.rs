use std::fs;
use std::path::PathBuf;

use noflip::report::{emit_plot_data, run_scenario, write_outputs};
use noflip::scenario::{parse_scenario, serialize_scenario};

fn load(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name);
    fs::read_to_string(path).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    dir
}

#[test]
fn case_one_scenario_end_to_end() {
    let sc = parse_scenario(&load("case_one.toml")).unwrap();
    assert_eq!(sc.orders(), vec!["alice-first", "bob-first"]);
    let report = run_scenario(&sc, 11);
    let text = report.render();
    assert_eq!(report.exit_status(), 0, "{text}");
    assert!(text.contains("triple.empty = true"));
    assert!(text.contains("level = none"));
    assert!(text.contains("order_swap_residual = 0"));
    assert!(text.contains("seed = 11"));
    assert!(text.contains(&format!("noflip {}", env!("CARGO_PKG_VERSION"))));

    let dir = scratch("case_one");
    let files = write_outputs(&report, &dir).unwrap();
    assert_eq!(files.len(), 4);
    let families = fs::read_to_string(dir.join("families.tsv")).unwrap();
    assert_eq!(families.lines().count(), 1 + 3 * 360);
    let inter = fs::read_to_string(dir.join("intersections.tsv")).unwrap();
    assert_eq!(inter.lines().count(), 4);
    let trace = fs::read_to_string(dir.join("optimization_trace.tsv")).unwrap();
    assert!(trace.lines().count() > 1);
}

#[test]
fn reports_are_deterministic() {
    let sc = parse_scenario(&load("case_one.toml")).unwrap();
    assert_eq!(run_scenario(&sc, 5).render(), run_scenario(&sc, 5).render());
}

#[test]
fn violation_scenarios() {
    let report = run_scenario(&parse_scenario(&load("case_one_vs_two.toml")).unwrap(), 1);
    assert!(report.render().contains("level = intermediate"));
    let report = run_scenario(&parse_scenario(&load("nonlinear_reset.toml")).unwrap(), 1);
    let text = report.render();
    assert!(text.contains("level = strong"));
    assert!(text.contains("order_guess_success = 0.75"));
}

#[test]
fn shipped_scenarios_round_trip() {
    for name in ["case_one.toml", "case_one_vs_two.toml", "nonlinear_reset.toml"] {
        let sc = parse_scenario(&load(name)).unwrap();
        assert_eq!(parse_scenario(&serialize_scenario(&sc)).unwrap(), sc, "{name}");
    }
}

#[test]
fn missing_sections_give_header_only_tables() {
    let sc = parse_scenario(&load("nonlinear_reset.toml")).unwrap();
    let report = run_scenario(&sc, 1);
    let dir = scratch("headers");
    emit_plot_data(&report, &dir).unwrap();
    for f in ["families.tsv", "intersections.tsv", "optimization_trace.tsv"] {
        assert_eq!(fs::read_to_string(dir.join(f)).unwrap().lines().count(), 1, "{f}");
    }
}

#[test]
fn failed_self_check_sets_nonzero_status() {
    // Demanding a gap larger than any channel can reach must fail the run.
    let mut sc = parse_scenario("[state]\nbuiltin = \"psi-minus\"\n[analyses]\noptimize-not = true\n").unwrap();
    sc.tolerances.set("not-gap", 0.9).unwrap();
    let report = run_scenario(&sc, 1);
    assert_eq!(report.exit_status(), 1);
    assert!(report.render().contains("check.strictly_imperfect = fail"));
}
