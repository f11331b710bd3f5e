// Runs a scenario file and prints its report.
//
// cargo run --example scenario_report -- scenarios/case_one_vs_two.toml

use std::path::PathBuf;

use noflip::report::{run_scenario, DEFAULT_SEED};
use noflip::scenario::parse_scenario;

pub fn run_file(path: &std::path::Path) -> Result<i32, Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(path)?;
    let scenario = parse_scenario(&text)?;
    let report = run_scenario(&scenario, DEFAULT_SEED);
    print!("{}", report.render());
    Ok(report.exit_status())
}

pub fn run() -> Result<i32, Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/nonlinear_reset.toml"));
    run_file(&path)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    std::process::exit(run()?);
}
