// Local Pauli statistics pin down a two-qubit state.

use noflip::qcore::random;
use noflip::taxonomy::{correlation_table, reconstruct_state, Settings};
use noflip::Ket;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run() -> noflip::Result<()> {
    let settings = Settings::pauli();
    let phi = correlation_table(&Ket::phi_plus().density(), &settings)?;
    println!("phi+ correlators: xx {} yy {} zz {}", phi.correlator(0, 0), phi.correlator(1, 1), phi.correlator(2, 2));

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rho = random::density(&mut rng, 4, 2);
    let back = reconstruct_state(&correlation_table(&rho, &settings)?)?;
    let err = (back.matrix() - rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    println!("random rank-2 state rebuilt with max entry error {err:e}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> noflip::Result<()> {
    run()
}
