// The same local steps run in both time orders. Linear operations never
// notice the order; the flip device is not even defined when it acts first.

use noflip::dynamics::{order_swap_residual, run as run_experiment, PureRule, StateMap, TimeOrderedExperiment};
use noflip::qcore::random;
use noflip::{Axis, ChoiMatrix, DensityMatrix, Party, ProjectiveMeasurement};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run() -> noflip::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let linear = TimeOrderedExperiment::new(DensityMatrix::singlet(), "alice-first")
        .step(Party::Alice, ProjectiveMeasurement::pauli(Axis::Y))
        .step(Party::Bob, StateMap::Cptp(ChoiMatrix::depolarizing(0.3)?))
        .step(Party::Bob, StateMap::unitary(random::unitary(&mut rng, 2))?);
    let swapped = linear.reversed("bob-first");
    println!("linear steps, order swap residual: {:e}", order_swap_residual(&linear, &swapped)?);

    let flip = StateMap::EnsembleMap(PureRule::Orthogonal);
    let alice_first = TimeOrderedExperiment::new(DensityMatrix::singlet(), "alice-first")
        .step(Party::Alice, ProjectiveMeasurement::pauli(Axis::Z))
        .step(Party::Bob, flip);
    let eta = run_experiment(&alice_first)?;
    println!("alice measures z, then bob flips: purity {}", eta.purity());

    let bob_first = TimeOrderedExperiment::new(DensityMatrix::singlet(), "bob-first")
        .step(Party::Bob, StateMap::PureFlip)
        .step(Party::Alice, ProjectiveMeasurement::pauli(Axis::Z));
    match run_experiment(&bob_first) {
        Ok(_) => println!("bob first: defined"),
        Err(e) => println!("bob first: {e}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> noflip::Result<()> {
    run()
}
