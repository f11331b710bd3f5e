// Membership queries against one constraint family, with the witness the
// closed form returns and the LP oracle's verdict alongside.

use noflip::oracle::family_membership_lp;
use noflip::theorem::{membership, PhaseFamily, Witness};
use noflip::{Axis, DensityMatrix, Ket};

pub fn run() -> noflip::Result<()> {
    let z = PhaseFamily::for_axis(Axis::Z);
    let (u, v) = z.basis_names();
    println!("family z: ({u} + e^(i alpha) {v})/sqrt2");

    let dephased = DensityMatrix::from_parts(
        &[
            vec![0.5, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.5],
        ],
        None,
    )?;
    let candidates = [
        ("phi+", Ket::phi_plus().density()),
        ("phi-", Ket::phi_minus().density()),
        ("dephased", dephased),
        ("singlet", DensityMatrix::singlet()),
        ("psi+", Ket::psi_plus().density()),
    ];
    for (name, chi) in candidates {
        let report = membership(&chi, &z);
        let lp = family_membership_lp(&chi, &z)?;
        print!("{name:>9}: member={} lp={} ", report.member, lp.feasible);
        match &report.witness {
            Witness::Decomposition(points) => {
                let parts: Vec<String> = points
                    .iter()
                    .map(|p| format!("{:.3} at alpha={:.4}", p.weight, p.phase))
                    .collect();
                println!("mixture {}", parts.join(" + "));
            }
            Witness::Violations(v) => println!("{}", v[0].describe(&z)),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> noflip::Result<()> {
    run()
}
