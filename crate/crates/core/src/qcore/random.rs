//! Seeded sampling of states, unitaries and channels for randomized checks.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{c, CMatrix, ChoiMatrix, DensityMatrix, Ket};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex Ginibre matrix with unit-variance entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(gaussian(rng), gaussian(rng)))
}

/// Uniform point on the unit sphere.
pub fn direction<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [gaussian(rng), gaussian(rng), gaussian(rng)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-9 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Haar-random pure state.
pub fn ket<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Ket {
    let amps = (0..dim).map(|_| c(gaussian(rng), gaussian(rng))).collect();
    Ket::normalized(amps).expect("gaussian vector is nonzero")
}

/// Random state of the given rank from the induced (Ginibre) measure.
pub fn density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityMatrix {
    let g = ginibre(rng, dim, rank.max(1));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m * c(1.0 / tr, 0.0)).expect("Gram matrix is a state")
}

/// Haar-random unitary (QR of a Ginibre matrix with the phase correction).
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let qr = ginibre(rng, dim, dim).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut phases = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        let d = r[(k, k)];
        phases[(k, k)] = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
    }
    q * phases
}

/// Random qubit channel with `kraus_count` Kraus operators.
pub fn channel<R: Rng + ?Sized>(rng: &mut R, kraus_count: usize) -> ChoiMatrix {
    let raw: Vec<CMatrix> = (0..kraus_count.max(1)).map(|_| ginibre(rng, 2, 2)).collect();
    ChoiMatrix::from_unnormalized_kraus(&raw).expect("generic Kraus set is invertible")
}
