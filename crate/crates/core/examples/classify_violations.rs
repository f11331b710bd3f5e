// Grades three pairs of final states: identical, different only in
// correlations, and different in Bob's own statistics.

use noflip::dynamics::{run as run_experiment, PureRule, StateMap, TimeOrderedExperiment};
use noflip::taxonomy::{classify, Settings};
use noflip::{Axis, DensityMatrix, Party, ProjectiveMeasurement};

fn final_state(axis: Axis, rule: PureRule) -> noflip::Result<DensityMatrix> {
    run_experiment(&TimeOrderedExperiment::new(DensityMatrix::singlet(), axis.name())
        .step(Party::Alice, ProjectiveMeasurement::pauli(axis))
        .step(Party::Bob, StateMap::EnsembleMap(rule)))
}

pub fn run() -> noflip::Result<()> {
    let settings = Settings::pauli();
    let eta_z = final_state(Axis::Z, PureRule::Orthogonal)?;
    let eta_x = final_state(Axis::X, PureRule::Orthogonal)?;
    let g_z = final_state(Axis::Z, PureRule::ResetNonBasis)?;
    let g_x = final_state(Axis::X, PureRule::ResetNonBasis)?;
    for (name, a, b) in [
        ("same state", &eta_z, &eta_z),
        ("flip after z vs x", &eta_z, &eta_x),
        ("reset after z vs x", &g_z, &g_x),
    ] {
        let v = classify(a, b, &settings)?;
        println!("{name}: {} ({})", v.level, v.describe(&settings));
        if let Some(p) = v.signaling_success(a, b, &settings) {
            println!("  one-shot order guess succeeds with probability {p}");
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> noflip::Result<()> {
    run()
}
