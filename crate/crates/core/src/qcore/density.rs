use num_complex::Complex64;

use super::{
    c, hermitian_deviation, hermitian_eigenvalues, kron, psd_sqrt, symmetrize,
    trace_product, CMatrix, Ket, Party, POSITIVITY_FLOOR, STATE_TOL,
};
use crate::error::{Error, Result};

/// A trace-one positive Hermitian operator on one qubit or a qubit pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validates `entries` as a state.
    ///
    /// The only repair applied is symmetrization `(A + A†)/2`; eigenvalues are
    /// never clipped, so a matrix with an eigenvalue below `-1e-10` is rejected.
    pub fn new(entries: CMatrix) -> Result<Self> {
        let n = entries.nrows();
        if n != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: entries.ncols(),
            });
        }
        if n != 2 && n != 4 {
            return Err(Error::UnsupportedDimension(n));
        }
        let dev = hermitian_deviation(&entries);
        if dev > STATE_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let entries = symmetrize(&entries);
        let tr = entries.trace().re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::TraceNotOne(tr));
        }
        let min = hermitian_eigenvalues(&entries)[0];
        if min < POSITIVITY_FLOOR {
            return Err(Error::NegativeEigenvalue(min));
        }
        Ok(DensityMatrix { entries })
    }

    /// Builds from real and imaginary parts given row by row.
    pub fn from_parts(re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Result<Self> {
        let n = re.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, row) in re.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)].re = v;
            }
        }
        if let Some(im) = im {
            if im.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: im.len(),
                });
            }
            for (i, row) in im.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: row.len(),
                    });
                }
                for (j, &v) in row.iter().enumerate() {
                    m[(i, j)].im = v;
                }
            }
        }
        Self::new(m)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::new(CMatrix::identity(dim, dim) * c(1.0 / dim as f64, 0.0))
    }

    pub fn singlet() -> Self {
        Ket::singlet().density()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_pair(&self) -> bool {
        self.dim() == 4
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries)
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    pub fn expectation(&self, op: &CMatrix) -> f64 {
        trace_product(op, &self.entries)
    }

    /// Bloch vector of a single-qubit state.
    pub fn bloch(&self) -> [f64; 3] {
        debug_assert_eq!(self.dim(), 2);
        let m = &self.entries;
        [2.0 * m[(0, 1)].re, -2.0 * m[(0, 1)].im, (m[(0, 0)] - m[(1, 1)]).re]
    }

    /// Conjugation `U ρ U†` by a unitary of matching dimension.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.nrows(),
            });
        }
        Self::new(u * &self.entries * u.adjoint())
    }

    pub(crate) fn require_dim(&self, dim: usize) -> Result<()> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim(),
            })
        }
    }

    /// Accepts a numerically derived matrix, symmetrizing it and renormalizing
    /// drift in the trace. Used for outputs of exact operations.
    pub(crate) fn from_derived(m: CMatrix) -> Result<Self> {
        let tr = m.trace().re;
        if tr.abs() < f64::MIN_POSITIVE {
            return Err(Error::TraceNotOne(tr));
        }
        Self::new(symmetrize(&m) * c(1.0 / tr, 0.0))
    }

    /// Convex mixture `Σ wᵢ ρᵢ`.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::TraceNotOne(0.0))?;
        let mut acc = CMatrix::zeros(first.1.dim(), first.1.dim());
        for (w, rho) in parts {
            rho.require_dim(first.1.dim())?;
            acc += rho.matrix() * c(*w, 0.0);
        }
        Self::new(acc)
    }
}

/// `a ⊗ b` with `a` in Alice's slot.
pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    a.require_dim(2)?;
    b.require_dim(2)?;
    DensityMatrix::new(kron(a.matrix(), b.matrix()))
}

/// Reduced state of `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: Party) -> Result<DensityMatrix> {
    rho.require_dim(4)?;
    DensityMatrix::new(partial_trace_matrix(rho.matrix(), keep))
}

/// Partial trace of an arbitrary 4×4 operator.
pub(crate) fn partial_trace_matrix(m: &CMatrix, keep: Party) -> CMatrix {
    let mut out = CMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = match keep {
                Party::Alice => m[(2 * i, 2 * j)] + m[(2 * i + 1, 2 * j + 1)],
                Party::Bob => m[(i, j)] + m[(2 + i, 2 + j)],
            };
        }
    }
    out
}

/// Uhlmann fidelity `(Tr √(√a b √a))²`, clamped to `[0, 1]`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    b.require_dim(a.dim())?;
    let sa = psd_sqrt(a.matrix());
    let inner = psd_sqrt(&(&sa * b.matrix() * &sa));
    let f = inner.trace().re;
    Ok((f * f).clamp(0.0, 1.0))
}

/// `½‖a − b‖₁`, clamped to `[0, 1]`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    b.require_dim(a.dim())?;
    let diff = a.matrix() - b.matrix();
    let d: f64 = hermitian_eigenvalues(&diff).iter().map(|v| v.abs()).sum();
    Ok((0.5 * d).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{identity2, pauli, random, Axis};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        super::super::max_abs_diff(a, b) <= tol
    }

    fn ket_dm(k: &Ket) -> DensityMatrix {
        k.density()
    }

    #[test]
    fn tensor_basis_product() {
        let rho = tensor(&ket_dm(&Ket::zero()), &ket_dm(&Ket::one())).unwrap();
        let expected = Ket::product(&Ket::zero(), &Ket::one()).unwrap().projector();
        assert!(close(rho.matrix(), &expected, 0.0));
        assert_eq!(rho.entry(1, 1), c(1.0, 0.0));
    }

    #[test]
    fn tensor_of_maximally_mixed() {
        let half = DensityMatrix::maximally_mixed(2).unwrap();
        let rho = tensor(&half, &half).unwrap();
        assert!(close(
            rho.matrix(),
            &(CMatrix::identity(4, 4) * c(0.25, 0.0)),
            1e-15
        ));
    }

    #[test]
    fn tensor_x_y_correlator() {
        let rho = tensor(&ket_dm(&Ket::plus()), &ket_dm(&Ket::plus_i())).unwrap();
        // oracle: explicit product of Pauli operators and trace
        let xy = pauli(Axis::X).kronecker(&pauli(Axis::Y));
        assert!((rho.expectation(&xy) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_rejects_pairs() {
        let pair = DensityMatrix::singlet();
        let q = ket_dm(&Ket::zero());
        assert!(matches!(
            tensor(&pair, &q),
            Err(Error::DimensionMismatch { expected: 2, found: 4 })
        ));
    }

    #[test]
    fn singlet_marginals_are_maximally_mixed() {
        let half = DensityMatrix::maximally_mixed(2).unwrap();
        for party in [Party::Alice, Party::Bob] {
            let r = partial_trace(&DensityMatrix::singlet(), party).unwrap();
            assert!(close(r.matrix(), half.matrix(), 1e-15));
        }
    }

    #[test]
    fn product_marginal() {
        let rho = Ket::product(&Ket::zero(), &Ket::one()).unwrap().density();
        let a = partial_trace(&rho, Party::Alice).unwrap();
        assert!(close(a.matrix(), &Ket::zero().projector(), 0.0));
    }

    #[test]
    fn flipped_pair_marginal() {
        // η = ½(|00⟩⟨00| + |11⟩⟨11|); summing the diagonal blocks gives I/2
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(0.5, 0.0);
        m[(3, 3)] = c(0.5, 0.0);
        let eta = DensityMatrix::new(m).unwrap();
        let b = partial_trace(&eta, Party::Bob).unwrap();
        assert!(close(b.matrix(), &(identity2() * c(0.5, 0.0)), 0.0));
    }

    #[test]
    fn validation_errors() {
        let mut m = CMatrix::identity(2, 2) * c(0.5, 0.0);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian(_))));
        let m = CMatrix::identity(2, 2);
        assert!(matches!(DensityMatrix::new(m), Err(Error::TraceNotOne(_))));
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(1.5, 0.0);
        m[(1, 1)] = c(-0.5, 0.0);
        assert!(matches!(
            DensityMatrix::new(m),
            Err(Error::NegativeEigenvalue(v)) if (v + 0.5).abs() < 1e-12
        ));
        assert!(matches!(
            DensityMatrix::new(CMatrix::identity(3, 3) * c(1.0 / 3.0, 0.0)),
            Err(Error::UnsupportedDimension(3))
        ));
    }

    #[test]
    fn tiny_negative_eigenvalue_tolerated() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(1.0 + 5e-11, 0.0);
        m[(1, 1)] = c(-5e-11, 0.0);
        assert!(DensityMatrix::new(m).is_ok());
    }

    #[test]
    fn distances() {
        let zero = ket_dm(&Ket::zero());
        let one = ket_dm(&Ket::one());
        let plus = ket_dm(&Ket::plus());
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-12);
        // |⟨0|x⟩|² = 1/2
        assert!((fidelity(&zero, &plus).unwrap() - 0.5).abs() < 1e-12);
        assert!(trace_distance(&zero, &zero).unwrap() < 1e-15);
    }

    #[test]
    fn distances_symmetric_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = random::density(&mut rng, 4, 4);
            let b = random::density(&mut rng, 4, 2);
            let (f1, f2) = (fidelity(&a, &b).unwrap(), fidelity(&b, &a).unwrap());
            assert!((f1 - f2).abs() < 1e-8);
            assert!((0.0..=1.0).contains(&f1));
            let (d1, d2) = (trace_distance(&a, &b).unwrap(), trace_distance(&b, &a).unwrap());
            assert!((d1 - d2).abs() < 1e-12);
            // Fuchs–van de Graaf
            assert!(1.0 - f1.sqrt() <= d1 + 1e-9);
            assert!(d1 <= (1.0 - f1).sqrt() + 1e-9);
        }
    }

    #[test]
    fn partial_trace_inverts_tensor() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = random::density(&mut rng, 2, 2);
            let rank = 1 + rand::Rng::gen::<bool>(&mut rng) as usize;
            let b = random::density(&mut rng, 2, rank);
            let ab = tensor(&a, &b).unwrap();
            assert!(close(partial_trace(&ab, Party::Alice).unwrap().matrix(), a.matrix(), 1e-12));
            assert!(close(partial_trace(&ab, Party::Bob).unwrap().matrix(), b.matrix(), 1e-12));
        }
    }
}
