use super::{
    c, hermitian_deviation, lift, max_abs_diff, Axis, CMatrix, DensityMatrix, Ket, Party,
    STATE_TOL,
};
use crate::error::{Error, Result};

/// Outcomes with Born probability at or below this are dropped.
const ZERO_PROBABILITY: f64 = 1e-14;

/// A complete set of mutually orthogonal projectors with outcome labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveMeasurement {
    projectors: Vec<CMatrix>,
    labels: Vec<String>,
}

impl ProjectiveMeasurement {
    pub fn new(projectors: Vec<CMatrix>, labels: Vec<String>) -> Result<Self> {
        if projectors.is_empty() {
            return Err(Error::InvalidMeasurement("no projectors".into()));
        }
        if labels.len() != projectors.len() {
            return Err(Error::InvalidMeasurement(format!(
                "{} labels for {} projectors",
                labels.len(),
                projectors.len()
            )));
        }
        let dim = projectors[0].nrows();
        if dim != 2 && dim != 4 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut sum = CMatrix::zeros(dim, dim);
        for (k, p) in projectors.iter().enumerate() {
            if p.nrows() != dim || p.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.nrows(),
                });
            }
            if hermitian_deviation(p) > STATE_TOL {
                return Err(Error::InvalidMeasurement(format!("projector {k} is not Hermitian")));
            }
            let idem = max_abs_diff(&(p * p), p);
            if idem > STATE_TOL {
                return Err(Error::InvalidMeasurement(format!(
                    "projector {k} is not idempotent (|P² − P| = {idem:e})"
                )));
            }
            for (l, q) in projectors.iter().enumerate().skip(k + 1) {
                let overlap = (p * q).iter().map(|z| z.norm()).fold(0.0, f64::max);
                if overlap > STATE_TOL {
                    return Err(Error::InvalidMeasurement(format!(
                        "projectors {k} and {l} are not orthogonal"
                    )));
                }
            }
            sum += p;
        }
        let completeness = max_abs_diff(&sum, &CMatrix::identity(dim, dim));
        if completeness > STATE_TOL {
            return Err(Error::InvalidMeasurement(format!(
                "projectors do not sum to identity (deviation {completeness:e})"
            )));
        }
        Ok(ProjectiveMeasurement { projectors, labels })
    }

    /// Rank-1 measurement in an orthonormal basis.
    pub fn from_basis(kets: &[Ket], labels: &[&str]) -> Result<Self> {
        Self::new(
            kets.iter().map(Ket::projector).collect(),
            labels.iter().map(|s| s.to_string()).collect(),
        )
    }

    /// Pauli measurement; outcome 0 is the `+1` eigenspace.
    pub fn pauli(axis: Axis) -> Self {
        let (plus, minus) = match axis {
            Axis::X => (Ket::plus(), Ket::minus()),
            Axis::Y => (Ket::plus_i(), Ket::minus_i()),
            Axis::Z => (Ket::zero(), Ket::one()),
        };
        Self::from_basis(&[plus, minus], &["+", "-"]).expect("Pauli eigenbasis")
    }

    /// Spin measurement along a Bloch direction; outcome 0 is `+n̂`.
    pub fn along(direction: [f64; 3]) -> Result<Self> {
        let up = Ket::from_bloch(direction)?;
        let down = super::orthogonal_pure(&up)?;
        Self::from_basis(&[up, down], &["+", "-"])
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].nrows()
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    fn rank(p: &CMatrix) -> usize {
        p.trace().re.round() as usize
    }

    /// Two rank-1 projectors on a qubit.
    pub fn is_rank_one_qubit(&self) -> bool {
        self.dim() == 2 && self.projectors.len() == 2 && self.projectors.iter().all(|p| Self::rank(p) == 1)
    }

    /// Unit-norm ket spanning a rank-1 projector, in canonical phase.
    pub fn eigenket(&self, outcome: usize) -> Result<Ket> {
        let p = self
            .projectors
            .get(outcome)
            .ok_or_else(|| Error::InvalidMeasurement(format!("no outcome {outcome}")))?;
        if Self::rank(p) != 1 {
            return Err(Error::InvalidMeasurement(format!(
                "outcome {outcome} is not rank one"
            )));
        }
        let best = (0..p.ncols())
            .max_by(|&a, &b| p.column(a).norm().total_cmp(&p.column(b).norm()))
            .expect("nonempty");
        Ok(Ket::from_vector(p.column(best).into_owned())?.canonical_phase())
    }

    /// Bloch direction of outcome 0 for a rank-1 qubit measurement.
    pub fn direction(&self) -> Option<[f64; 3]> {
        if !self.is_rank_one_qubit() {
            return None;
        }
        self.eigenket(0).ok().map(|k| k.bloch())
    }

    /// Whether this is the Pauli measurement for `axis`, outcomes in `+, −` order.
    pub fn matches_pauli(&self, axis: Axis) -> bool {
        let reference = Self::pauli(axis);
        self.len() == 2
            && self.dim() == 2
            && self
                .projectors
                .iter()
                .zip(reference.projectors())
                .all(|(p, q)| max_abs_diff(p, q) < 1e-9)
    }

    /// Projectors acting on the full space of `rho` for the given party.
    fn lifted(&self, rho_dim: usize, party: Party) -> Result<Vec<CMatrix>> {
        match (self.dim(), rho_dim) {
            (a, b) if a == b => Ok(self.projectors.clone()),
            (2, 4) => Ok(self.projectors.iter().map(|p| lift(p, party)).collect()),
            (a, b) => Err(Error::DimensionMismatch {
                expected: b,
                found: a,
            }),
        }
    }
}

/// One outcome-conditioned post-measurement state.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub outcome: usize,
    pub probability: f64,
    pub state: DensityMatrix,
}

/// Result of a projective measurement under the projection postulate.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementUpdate {
    /// Outcome-conditioned normalized states with nonzero Born probability.
    pub ensemble: Vec<Branch>,
    /// `Σᵢ Pᵢ ρ Pᵢ`, the unread post-measurement state.
    pub averaged: DensityMatrix,
}

impl MeasurementUpdate {
    pub fn total_probability(&self) -> f64 {
        self.ensemble.iter().map(|b| b.probability).sum()
    }
}

/// Measures `party`'s factor of `rho` (identity on the other factor).
pub fn measure_update(
    rho: &DensityMatrix,
    m: &ProjectiveMeasurement,
    party: Party,
) -> Result<MeasurementUpdate> {
    let projectors = m.lifted(rho.dim(), party)?;
    let n = rho.dim();
    let mut averaged = CMatrix::zeros(n, n);
    let mut ensemble = Vec::new();
    for (outcome, p) in projectors.iter().enumerate() {
        let post = p * rho.matrix() * p;
        averaged += &post;
        let prob = post.trace().re;
        if prob > ZERO_PROBABILITY {
            ensemble.push(Branch {
                outcome,
                probability: prob,
                state: DensityMatrix::from_derived(post * c(1.0 / prob, 0.0))?,
            });
        }
    }
    Ok(MeasurementUpdate {
        ensemble,
        averaged: DensityMatrix::from_derived(averaged)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{random, tensor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        max_abs_diff(a, b) <= tol
    }

    #[test]
    fn singlet_z_measurement_dephases() {
        let up = measure_update(
            &DensityMatrix::singlet(),
            &ProjectiveMeasurement::pauli(Axis::Z),
            Party::Alice,
        )
        .unwrap();
        let mut sigma = CMatrix::zeros(4, 4);
        sigma[(1, 1)] = c(0.5, 0.0);
        sigma[(2, 2)] = c(0.5, 0.0);
        assert!(close(up.averaged.matrix(), &sigma, 1e-15));
        assert_eq!(up.ensemble.len(), 2);
        assert!((up.total_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenstate_is_left_unchanged() {
        let rho = Ket::product(&Ket::zero(), &Ket::zero()).unwrap().density();
        let up = measure_update(&rho, &ProjectiveMeasurement::pauli(Axis::Z), Party::Alice).unwrap();
        assert_eq!(up.ensemble.len(), 1);
        assert!((up.ensemble[0].probability - 1.0).abs() < 1e-15);
        assert!(close(up.ensemble[0].state.matrix(), rho.matrix(), 1e-15));
        assert!(close(up.averaged.matrix(), rho.matrix(), 1e-15));
    }

    #[test]
    fn singlet_y_measurement_ensemble() {
        // ψ⁻ = (|yȳ⟩ − |ȳy⟩)/√2 up to phase, so outcomes are anticorrelated in y
        let up = measure_update(
            &DensityMatrix::singlet(),
            &ProjectiveMeasurement::pauli(Axis::Y),
            Party::Alice,
        )
        .unwrap();
        let y = Ket::plus_i().density();
        let ybar = Ket::minus_i().density();
        let expected = [
            tensor(&y, &ybar).unwrap(),
            tensor(&ybar, &y).unwrap(),
        ];
        assert_eq!(up.ensemble.len(), 2);
        for (branch, want) in up.ensemble.iter().zip(expected.iter()) {
            assert!((branch.probability - 0.5).abs() < 1e-12);
            assert!(close(branch.state.matrix(), want.matrix(), 1e-12));
        }
    }

    #[test]
    fn invalid_measurements_rejected() {
        let p = Ket::zero().projector();
        assert!(ProjectiveMeasurement::new(vec![p.clone()], vec!["0".into()]).is_err());
        assert!(ProjectiveMeasurement::new(
            vec![p.clone(), Ket::plus().projector()],
            vec!["a".into(), "b".into()]
        )
        .is_err());
        let not_idempotent = p.clone() * c(0.5, 0.0);
        assert!(ProjectiveMeasurement::new(
            vec![not_idempotent.clone(), not_idempotent],
            vec!["a".into(), "b".into()]
        )
        .is_err());
    }

    #[test]
    fn random_updates_preserve_probability_and_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let rho = random::density(&mut rng, 4, 4);
            let m = ProjectiveMeasurement::along(random::direction(&mut rng)).unwrap();
            let party = if rand::Rng::gen::<bool>(&mut rng) { Party::Alice } else { Party::Bob };
            let up = measure_update(&rho, &m, party).unwrap();
            assert!((up.total_probability() - 1.0).abs() < 1e-12);
            // dephasing identity: diagonal blocks in the measured basis are untouched
            for p in m.projectors() {
                let l = lift(p, party);
                let before = &l * rho.matrix() * &l;
                let after = &l * up.averaged.matrix() * &l;
                assert!(close(&before, &after, 1e-12));
            }
        }
    }
}
