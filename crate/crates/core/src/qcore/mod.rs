//! Dense complex linear algebra for one and two qubits.
//!
//! Basis ordering is fixed throughout the crate: `|00⟩, |01⟩, |10⟩, |11⟩`
//! with Alice as the left tensor factor and Bob as the right one.

mod channel;
mod density;
mod ket;
mod measurement;
pub mod random;

pub use channel::ChoiMatrix;
pub use density::{fidelity, partial_trace, tensor, trace_distance, DensityMatrix};
pub(crate) use density::partial_trace_matrix;
pub use ket::{orthogonal_pure, Ket};
pub use measurement::{measure_update, Branch, MeasurementUpdate, ProjectiveMeasurement};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Tolerance for normalization, Hermiticity, trace and idempotence checks.
pub const STATE_TOL: f64 = 1e-12;

/// Smallest eigenvalue accepted for a positive semidefinite operator.
pub const POSITIVITY_FLOOR: f64 = -1e-10;

/// Tolerance for channel (Choi) constraints.
pub const CHANNEL_TOL: f64 = 1e-10;

/// Which side of the shared pair an operation touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
        }
    }
}

impl std::fmt::Display for Party {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// 2×2 identity.
pub fn identity2() -> CMatrix {
    CMatrix::identity(2, 2)
}

/// Pauli matrix for the given axis.
pub fn pauli(axis: Axis) -> CMatrix {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match axis {
        Axis::X => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        Axis::Y => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        Axis::Z => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// `[I, X, Y, Z]`, the operator basis used for Bloch vectors and tomography.
pub fn pauli_basis() -> [CMatrix; 4] {
    [identity2(), pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z)]
}

pub(crate) fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Lifts a single-qubit operator to the pair, acting on `party`.
pub fn lift(op: &CMatrix, party: Party) -> CMatrix {
    match party {
        Party::Alice => kron(op, &identity2()),
        Party::Bob => kron(&identity2(), op),
    }
}

pub(crate) fn hermitian_deviation(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub(crate) fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// Square root of a positive semidefinite matrix; negative noise is clipped.
pub(crate) fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let mut diag = CMatrix::zeros(n, n);
    for (k, v) in values.iter().enumerate() {
        diag[(k, k)] = c(v.max(0.0).sqrt(), 0.0);
    }
    &vectors * diag * vectors.adjoint()
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Real expectation value `Tr(op · m)` for Hermitian `op`.
pub(crate) fn trace_product(op: &CMatrix, m: &CMatrix) -> f64 {
    (op * m).trace().re
}
