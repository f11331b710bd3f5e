use num_complex::Complex64;

use super::{
    c, density::partial_trace_matrix, hermitian_eigen, identity2, max_abs_diff, pauli_basis,
    CMatrix, DensityMatrix, Party, CHANNEL_TOL,
};
use crate::error::{Error, Result};

/// Choi matrix `J = Σᵢⱼ |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)` of a qubit channel.
///
/// The input factor is on the left, so trace preservation reads
/// `Tr_out J = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    entries: CMatrix,
}

impl ChoiMatrix {
    /// Validates complete positivity and trace preservation within `1e-10`.
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != 4 || entries.ncols() != 4 {
            return Err(Error::InvalidChannel(format!(
                "Choi matrix must be 4x4, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let choi = ChoiMatrix {
            entries: super::symmetrize(&entries),
        };
        let herm = max_abs_diff(&entries, &choi.entries);
        if herm > CHANNEL_TOL {
            return Err(Error::InvalidChannel(format!("not Hermitian ({herm:e})")));
        }
        let min = choi.min_eigenvalue();
        if min < -CHANNEL_TOL {
            return Err(Error::InvalidChannel(format!(
                "not completely positive (eigenvalue {min:e})"
            )));
        }
        let tp = choi.tp_residual();
        if tp > CHANNEL_TOL {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving (residual {tp:e})"
            )));
        }
        Ok(choi)
    }

    pub fn from_kraus(kraus: &[CMatrix]) -> Result<Self> {
        let mut j = CMatrix::zeros(4, 4);
        for k in kraus {
            if k.nrows() != 2 || k.ncols() != 2 {
                return Err(Error::InvalidChannel("Kraus operators must be 2x2".into()));
            }
            let v = vectorize(k);
            j += &v * v.adjoint();
        }
        Self::new(j)
    }

    /// Rescales `Kᵢ → Kᵢ S^{-1/2}` with `S = Σ Kᵢ†Kᵢ`, then builds the channel.
    pub fn from_unnormalized_kraus(kraus: &[CMatrix]) -> Result<Self> {
        let mut s = CMatrix::zeros(2, 2);
        for k in kraus {
            s += k.adjoint() * k;
        }
        let inv_sqrt = inverse_sqrt(&s)?;
        let normalized: Vec<CMatrix> = kraus.iter().map(|k| k * &inv_sqrt).collect();
        Self::from_kraus(&normalized)
    }

    /// `(S^{-1/2} ⊗ I) M (S^{-1/2} ⊗ I)` with `S = Tr_out M`, for any PSD `M`.
    ///
    /// Every PSD `M` with invertible `S` lands on a valid channel, which makes
    /// this the feasibility map used by the optimizer.
    pub fn normalize_psd(m: &CMatrix) -> Result<Self> {
        let s = partial_trace_matrix(m, Party::Alice);
        let inv = inverse_sqrt(&s)?;
        let lifted = inv.kronecker(&identity2());
        Self::new(&lifted * m * &lifted)
    }

    pub fn unitary(u: &CMatrix) -> Result<Self> {
        let err = max_abs_diff(&(u.adjoint() * u), &identity2());
        if err > 1e-12 {
            return Err(Error::InvalidChannel(format!("U†U ≠ I (deviation {err:e})")));
        }
        Self::from_kraus(std::slice::from_ref(u))
    }

    pub fn identity() -> Self {
        Self::from_kraus(&[identity2()]).expect("identity channel")
    }

    /// `Λ(ρ) = Tr(ρ) I/2`.
    pub fn completely_depolarizing() -> Self {
        Self::new(CMatrix::identity(4, 4) * c(0.5, 0.0)).expect("depolarizing channel")
    }

    /// `Λ(ρ) = (1 − p) ρ + p Tr(ρ) I/2`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidChannel(format!("depolarizing strength {p} outside [0, 1]")));
        }
        Self::new(
            Self::identity().entries * c(1.0 - p, 0.0)
                + Self::completely_depolarizing().entries * c(p, 0.0),
        )
    }

    /// Unital covariant channel scaling every Bloch vector by `s`.
    /// Completely positive exactly for `s ∈ [−1/3, 1]`.
    pub fn bloch_scaling(s: f64) -> Result<Self> {
        Self::new(Self::bloch_scaling_matrix(s))
    }

    pub(crate) fn bloch_scaling_matrix(s: f64) -> CMatrix {
        Self::identity().entries * c(s, 0.0)
            + Self::completely_depolarizing().entries * c(1.0 - s, 0.0)
    }

    /// `Λ(ρ) = (XρX + YρY + ZρZ)/3`.
    pub fn pauli_average() -> Self {
        let paulis = pauli_basis();
        let kraus: Vec<CMatrix> = paulis[1..]
            .iter()
            .map(|p| p * c((1.0f64 / 3.0).sqrt(), 0.0))
            .collect();
        Self::from_kraus(&kraus).expect("Pauli average channel")
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.entries).0[0]
    }

    /// `max |Tr_out J − I|`.
    pub fn tp_residual(&self) -> f64 {
        max_abs_diff(&partial_trace_matrix(&self.entries, Party::Alice), &identity2())
    }

    /// Kraus operators from the eigendecomposition of `J`.
    pub fn kraus(&self) -> Vec<CMatrix> {
        let (values, vectors) = hermitian_eigen(&self.entries);
        values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 1e-14)
            .map(|(k, &v)| {
                let col = vectors.column(k);
                CMatrix::from_fn(2, 2, |a, i| col[2 * i + a] * v.sqrt())
            })
            .collect()
    }

    /// `Λ(X)` for an arbitrary 2×2 operator.
    pub fn apply_matrix(&self, x: &CMatrix) -> CMatrix {
        let j = &self.entries;
        CMatrix::from_fn(2, 2, |a, b| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..2 {
                for k in 0..2 {
                    acc += x[(i, k)] * j[(2 * i + a, 2 * k + b)];
                }
            }
            acc
        })
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        rho.require_dim(2)?;
        DensityMatrix::from_derived(self.apply_matrix(rho.matrix()))
    }

    /// Affine action on Bloch vectors: `r ↦ M r + t`.
    pub fn bloch_affine(&self) -> ([[f64; 3]; 3], [f64; 3]) {
        let basis = pauli_basis();
        let half = |m: &CMatrix| m * c(0.5, 0.0);
        let image_of_center = self.apply_matrix(&half(&basis[0]));
        let mut t = [0.0; 3];
        let mut m = [[0.0; 3]; 3];
        for j in 0..3 {
            t[j] = (&basis[j + 1] * &image_of_center).trace().re;
            for k in 0..3 {
                let image = self.apply_matrix(&half(&basis[k + 1]));
                m[j][k] = (&basis[j + 1] * image).trace().re;
            }
        }
        (m, t)
    }

    /// The channel `ρ ↦ U Λ(U†ρU) U†`.
    pub fn rotated(&self, u: &CMatrix) -> Result<Self> {
        let mut j = CMatrix::zeros(4, 4);
        for i in 0..2 {
            for k in 0..2 {
                let mut unit = CMatrix::zeros(2, 2);
                unit[(i, k)] = c(1.0, 0.0);
                let out = u * self.apply_matrix(&(u.adjoint() * unit * u)) * u.adjoint();
                for a in 0..2 {
                    for b in 0..2 {
                        j[(2 * i + a, 2 * k + b)] = out[(a, b)];
                    }
                }
            }
        }
        Self::new(j)
    }
}

/// Column stacking matching the Choi index `2i + a` ↔ `K[a, i]`.
fn vectorize(k: &CMatrix) -> CMatrix {
    CMatrix::from_fn(4, 1, |idx, _| k[(idx % 2, idx / 2)])
}

fn inverse_sqrt(s: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(s);
    if values[0] <= 1e-14 {
        return Err(Error::InvalidChannel(format!(
            "singular normalization (eigenvalue {:e})",
            values[0]
        )));
    }
    let mut diag = CMatrix::zeros(2, 2);
    for (k, v) in values.iter().enumerate() {
        diag[(k, k)] = c(1.0 / v.sqrt(), 0.0);
    }
    Ok(&vectors * diag * vectors.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{pauli, random, Axis, Ket};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_channel_acts_by_conjugation() {
        let x = ChoiMatrix::unitary(&pauli(Axis::X)).unwrap();
        let out = x.apply(&Ket::zero().density()).unwrap();
        assert!(max_abs_diff(out.matrix(), &Ket::one().projector()) < 1e-15);
    }

    #[test]
    fn kraus_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let ch = random::channel(&mut rng, 3);
            let again = ChoiMatrix::from_kraus(&ch.kraus()).unwrap();
            assert!(max_abs_diff(ch.matrix(), again.matrix()) < 1e-12);
        }
    }

    #[test]
    fn normalized_psd_is_a_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let g = random::ginibre(&mut rng, 4, 4);
            let ch = ChoiMatrix::normalize_psd(&(&g * g.adjoint())).unwrap();
            assert!(ch.tp_residual() < 1e-12);
            assert!(ch.min_eigenvalue() > -1e-12);
        }
    }

    #[test]
    fn rejects_non_cptp() {
        let mut j = ChoiMatrix::identity().matrix().clone();
        j[(0, 0)] = c(2.0, 0.0);
        assert!(ChoiMatrix::new(j).is_err());
        assert!(ChoiMatrix::bloch_scaling(-0.5).is_err());
        assert!(ChoiMatrix::bloch_scaling(-1.0 / 3.0).is_ok());
    }

    #[test]
    fn bloch_affine_matches_direct_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let ch = random::channel(&mut rng, 2);
            let (m, t) = ch.bloch_affine();
            let psi = random::ket(&mut rng, 2);
            let r = psi.bloch();
            let out = ch.apply(&psi.density()).unwrap().bloch();
            for j in 0..3 {
                let predicted = t[j] + (0..3).map(|k| m[j][k] * r[k]).sum::<f64>();
                assert!((predicted - out[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pauli_average_inverts_and_shrinks() {
        let (m, t) = ChoiMatrix::pauli_average().bloch_affine();
        for j in 0..3 {
            assert!(t[j].abs() < 1e-15);
            for k in 0..3 {
                let expected = if j == k { -1.0 / 3.0 } else { 0.0 };
                assert!((m[j][k] - expected).abs() < 1e-15);
            }
        }
    }
}
