use nalgebra::DVector;
use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use super::{c, CMatrix, DensityMatrix, STATE_TOL};
use crate::error::{Error, Result};

/// Amplitudes below this modulus are skipped when fixing the global phase.
const PHASE_PIVOT: f64 = 1e-12;

/// A normalized pure state of one qubit (2 amplitudes) or two qubits (4).
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amps: DVector<Complex64>,
}

impl Ket {
    /// Validates an amplitude vector. The norm must already be 1.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        check_len(amps.len())?;
        let v = DVector::from_vec(amps);
        let norm = v.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Ket { amps: v })
    }

    /// Rescales a nonzero amplitude vector to unit norm.
    pub fn normalized(amps: Vec<Complex64>) -> Result<Self> {
        check_len(amps.len())?;
        let v = DVector::from_vec(amps);
        let norm = v.norm();
        if norm < PHASE_PIVOT {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Ket { amps: v / c(norm, 0.0) })
    }

    pub(crate) fn from_vector(v: DVector<Complex64>) -> Result<Self> {
        Self::normalized(v.iter().copied().collect())
    }

    fn real(amps: &[f64]) -> Self {
        Ket::normalized(amps.iter().map(|&a| c(a, 0.0)).collect()).expect("literal ket")
    }

    pub fn zero() -> Self {
        Self::real(&[1.0, 0.0])
    }

    pub fn one() -> Self {
        Self::real(&[0.0, 1.0])
    }

    /// `|x⟩ = (|0⟩ + |1⟩)/√2`
    pub fn plus() -> Self {
        Self::real(&[1.0, 1.0])
    }

    /// `|x̄⟩ = (|0⟩ − |1⟩)/√2`
    pub fn minus() -> Self {
        Self::real(&[1.0, -1.0])
    }

    /// `|y⟩ = (|0⟩ + i|1⟩)/√2`
    pub fn plus_i() -> Self {
        Ket::normalized(vec![c(1.0, 0.0), c(0.0, 1.0)]).expect("literal ket")
    }

    /// `|ȳ⟩ = (|0⟩ − i|1⟩)/√2`
    pub fn minus_i() -> Self {
        Ket::normalized(vec![c(1.0, 0.0), c(0.0, -1.0)]).expect("literal ket")
    }

    /// `cos θ|0⟩ + e^{iφ} sin θ|1⟩`
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Ket {
            amps: DVector::from_vec(vec![
                c(theta.cos(), 0.0),
                Complex64::from_polar(theta.sin(), phi),
            ]),
        }
    }

    /// Pure qubit state with the given Bloch direction (need not be unit length).
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let n = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if n < PHASE_PIVOT {
            return Err(Error::NotNormalized(n));
        }
        let z = (r[2] / n).clamp(-1.0, 1.0);
        let theta = z.acos() / 2.0;
        let phi = r[1].atan2(r[0]);
        Ok(Self::from_angles(theta, phi))
    }

    /// Bell state `|ψ⁻⟩ = (|01⟩ − |10⟩)/√2`.
    pub fn singlet() -> Self {
        Self::real(&[0.0, 1.0, -1.0, 0.0])
    }

    /// `|ψ⁺⟩ = (|01⟩ + |10⟩)/√2`
    pub fn psi_plus() -> Self {
        Self::real(&[0.0, 1.0, 1.0, 0.0])
    }

    /// `|φ⁺⟩ = (|00⟩ + |11⟩)/√2`
    pub fn phi_plus() -> Self {
        Self::real(&[1.0, 0.0, 0.0, 1.0])
    }

    /// `|φ⁻⟩ = (|00⟩ − |11⟩)/√2`
    pub fn phi_minus() -> Self {
        Self::real(&[1.0, 0.0, 0.0, -1.0])
    }

    /// `a ⊗ b`, Alice on the left.
    pub fn product(a: &Ket, b: &Ket) -> Result<Self> {
        if a.dim() != 2 || b.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: if a.dim() != 2 { a.dim() } else { b.dim() },
            });
        }
        Ok(Ket {
            amps: a.amps.kronecker(&b.amps),
        })
    }

    /// `(first + e^{i·phase} second)/√2` for orthogonal `first`, `second`.
    pub fn superpose(first: &Ket, second: &Ket, phase: f64) -> Result<Self> {
        if first.dim() != second.dim() {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: second.dim(),
            });
        }
        let v = (&first.amps + &second.amps * Complex64::from_polar(1.0, phase))
            * c(FRAC_1_SQRT_2, 0.0);
        Ket::new(v.iter().copied().collect())
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn amplitude(&self, i: usize) -> Complex64 {
        self.amps[i]
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Ket) -> Complex64 {
        self.amps.dotc(&other.amps)
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Ket {
            amps: &self.amps * factor,
        }
    }

    pub fn apply(&self, op: &CMatrix) -> Result<Self> {
        if op.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.ncols(),
            });
        }
        Ket::from_vector(op * &self.amps)
    }

    /// Same ray, with the first nonzero amplitude made real and nonnegative.
    pub fn canonical_phase(&self) -> Self {
        match self.amps.iter().find(|a| a.norm() > PHASE_PIVOT) {
            Some(pivot) => self.scaled(pivot.conj() / pivot.norm()),
            None => self.clone(),
        }
    }

    /// Projector `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> CMatrix {
        &self.amps * self.amps.adjoint()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::new(self.projector()).expect("projector of a normalized ket is a state")
    }

    /// Bloch vector of a single-qubit ket.
    pub fn bloch(&self) -> [f64; 3] {
        debug_assert_eq!(self.dim(), 2);
        let (a, b) = (self.amps[0], self.amps[1]);
        let cross = a.conj() * b;
        [2.0 * cross.re, 2.0 * cross.im, a.norm_sqr() - b.norm_sqr()]
    }

    /// Fidelity `|⟨a|b⟩|²` between pure states.
    pub fn overlap(&self, other: &Ket) -> f64 {
        self.inner(other).norm_sqr()
    }
}

fn check_len(n: usize) -> Result<()> {
    if n == 2 || n == 4 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(n))
    }
}

/// The orthogonal complement of a single-qubit pure state, in canonical phase.
///
/// `a|0⟩ + b|1⟩ ↦ −b̄|0⟩ + ā|1⟩`, which negates the Bloch vector.
pub fn orthogonal_pure(psi: &Ket) -> Result<Ket> {
    if psi.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: psi.dim(),
        });
    }
    let (a, b) = (psi.amps[0], psi.amps[1]);
    Ok(Ket {
        amps: DVector::from_vec(vec![-b.conj(), a.conj()]),
    }
    .canonical_phase())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn same_ray(a: &Ket, b: &Ket) -> bool {
        (a.overlap(b) - 1.0).abs() < 1e-12
    }

    #[test]
    fn unnormalized_rejected() {
        assert!(matches!(
            Ket::new(vec![c(1.0, 0.0), c(1.0, 0.0)]),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            Ket::normalized(vec![c(1.0, 0.0); 3]),
            Err(Error::UnsupportedDimension(3))
        ));
    }

    #[test]
    fn flip_of_basis_states() {
        assert_eq!(orthogonal_pure(&Ket::zero()).unwrap(), Ket::one());
        assert!(same_ray(&orthogonal_pure(&Ket::plus()).unwrap(), &Ket::minus()));
        let flipped_y = orthogonal_pure(&Ket::plus_i()).unwrap();
        assert!((flipped_y.amplitude(0) - Ket::minus_i().amplitude(0)).norm() < 1e-15);
        assert!((flipped_y.amplitude(1) - Ket::minus_i().amplitude(1)).norm() < 1e-15);
    }

    #[test]
    fn flip_of_parameterized_state() {
        // oracle: sin θ|0⟩ − e^{iφ} cos θ|1⟩ is orthogonal to cos θ|0⟩ + e^{iφ} sin θ|1⟩
        for i in 0..25 {
            for j in 0..25 {
                let theta = PI * i as f64 / 24.0;
                let phi = 2.0 * PI * j as f64 / 25.0;
                let psi = Ket::from_angles(theta, phi);
                let flipped = orthogonal_pure(&psi).unwrap();
                assert!(psi.inner(&flipped).norm() < 1e-12);
                let expected = Ket::normalized(vec![
                    c(theta.sin(), 0.0),
                    -Complex64::from_polar(theta.cos(), phi),
                ])
                .unwrap();
                assert!(same_ray(&flipped, &expected));
                let (r, s) = (psi.bloch(), flipped.bloch());
                for k in 0..3 {
                    assert!((r[k] + s[k]).abs() < 1e-12);
                }
                let pivot = flipped
                    .amplitudes()
                    .iter()
                    .find(|a| a.norm() > 1e-12)
                    .unwrap();
                assert!(pivot.im.abs() < 1e-15 && pivot.re > 0.0);
            }
        }
    }

    #[test]
    fn bloch_round_trip() {
        let r = [0.3, -0.5, 0.2];
        let n = (0.09f64 + 0.25 + 0.04).sqrt();
        let b = Ket::from_bloch(r).unwrap().bloch();
        for k in 0..3 {
            assert!((b[k] - r[k] / n).abs() < 1e-12);
        }
    }

    #[test]
    fn bell_states_are_orthonormal() {
        let bells = [
            Ket::singlet(),
            Ket::psi_plus(),
            Ket::phi_plus(),
            Ket::phi_minus(),
        ];
        for (i, a) in bells.iter().enumerate() {
            for (j, b) in bells.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((a.overlap(b) - expected).abs() < 1e-15);
            }
        }
    }
}
