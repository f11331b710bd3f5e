//! Independent cross-checks.
//!
//! Nothing here reuses the closed-form membership test or the optimizer's
//! search path: hull membership is decided by linear programming over a
//! discretized family, and the approximate-NOT optimum is found by random
//! channel sampling followed by stochastic hill climbing.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::qcore::{orthogonal_pure, random, CMatrix, ChoiMatrix, DensityMatrix, Ket};
use crate::theorem::PhaseFamily;
use crate::unot::{score, IntegrationRule};

/// Phase samples used by the LP oracle.
pub const ORACLE_GRID: usize = 720;

/// An LP optimum at or below this L1 residual counts as feasible.
pub const LP_FEASIBILITY_TOL: f64 = 1e-8;

/// Real coordinates of a Hermitian matrix: diagonal, then `Re`/`Im` of the
/// strict upper triangle.
pub fn hermitian_coordinates(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(m[(i, i)].re);
    }
    for i in 0..n {
        for j in i + 1..n {
            out.push(m[(i, j)].re);
            out.push(m[(i, j)].im);
        }
    }
    out
}

/// Smallest `Σ|Σₖ wₖ columnₖ − target|` over the probability simplex.
pub fn min_l1_residual(columns: &[Vec<f64>], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let weights: Vec<_> = columns
        .iter()
        .map(|_| problem.add_var(0.0, (0.0, f64::INFINITY)))
        .collect();
    for (row, &rhs) in target.iter().enumerate() {
        let over = problem.add_var(1.0, (0.0, f64::INFINITY));
        let under = problem.add_var(1.0, (0.0, f64::INFINITY));
        let mut expr: Vec<_> = weights
            .iter()
            .zip(columns)
            .filter(|(_, col)| col[row] != 0.0)
            .map(|(&w, col)| (w, col[row]))
            .collect();
        expr.push((over, 1.0));
        expr.push((under, -1.0));
        problem.add_constraint(expr, ComparisonOp::Eq, rhs);
    }
    problem.add_constraint(
        weights.iter().map(|&w| (w, 1.0)).collect::<Vec<_>>(),
        ComparisonOp::Eq,
        1.0,
    );
    let solution = problem
        .solve()
        .map_err(|e| Error::LinearProgram(e.to_string()))?;
    let w: Vec<f64> = weights.iter().map(|&v| *solution.var_value(v)).collect();
    Ok((solution.objective(), w))
}

/// Verdict of the LP hull-membership oracle.
#[derive(Debug, Clone)]
pub struct LpMembership {
    pub feasible: bool,
    /// L1 residual at the LP optimum.
    pub residual: f64,
    /// Max-abs entrywise error of the reconstructed mixture.
    pub reconstruction_error: f64,
    /// `(phase, weight)` pairs with nonzero weight.
    pub support: Vec<(f64, f64)>,
}

/// `n` equally spaced phases starting at `anchor`.
pub fn phase_grid(n: usize, anchor: f64) -> Vec<f64> {
    (0..n)
        .map(|k| (anchor + 2.0 * PI * k as f64 / n as f64).rem_euclid(2.0 * PI))
        .collect()
}

/// Decides whether `chi` is a convex mixture of the family's extreme states
/// sampled at [`ORACLE_GRID`] phases.
///
/// The grid is anchored at the phase of the coherence `⟨u|χ|v⟩`. An even grid
/// then contains both the anchor and its antipode, so every point of the
/// continuous hull along that ray is an exact mixture of grid states.
pub fn family_membership_lp(chi: &DensityMatrix, family: &PhaseFamily) -> Result<LpMembership> {
    let u = family.upper().amplitudes().clone();
    let v = family.lower().amplitudes().clone();
    let coherence: Complex64 = (u.adjoint() * chi.matrix() * &v)[(0, 0)];
    let anchor = if coherence.norm() > 1e-13 {
        -coherence.arg()
    } else {
        0.0
    };
    let phases = phase_grid(ORACLE_GRID, anchor);
    let extremes: Vec<CMatrix> = phases
        .iter()
        .map(|&p| family.extreme_state(p).projector())
        .collect();
    let columns: Vec<Vec<f64>> = extremes.iter().map(hermitian_coordinates).collect();
    let target = hermitian_coordinates(chi.matrix());
    let (residual, weights) = min_l1_residual(&columns, &target)?;
    let mut mixture = CMatrix::zeros(4, 4);
    let mut support = Vec::new();
    for ((w, e), p) in weights.iter().zip(&extremes).zip(&phases) {
        if *w > 0.0 {
            mixture += e * Complex64::new(*w, 0.0);
            support.push((*p, *w));
        }
    }
    let reconstruction_error = (&mixture - chi.matrix())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    Ok(LpMembership {
        feasible: residual <= LP_FEASIBILITY_TOL,
        residual,
        reconstruction_error,
        support,
    })
}

/// Settings for [`brute_force_not_optimum`].
#[derive(Debug, Clone)]
pub struct BruteForceConfig {
    pub seed: u64,
    pub samples: usize,
    pub kraus_count: usize,
    pub survivors: usize,
    pub refinement_steps: usize,
    pub grid_points: usize,
    /// Inputs in the smoothed refinement objective.
    pub probe_points: usize,
}

impl Default for BruteForceConfig {
    fn default() -> Self {
        BruteForceConfig {
            seed: 0x5eed,
            samples: 4000,
            kraus_count: 4,
            survivors: 4,
            refinement_steps: 12000,
            grid_points: 2000,
            probe_points: 200,
        }
    }
}

fn perturb<R: Rng>(rng: &mut R, kraus: &[CMatrix], scale: f64) -> Vec<CMatrix> {
    kraus
        .iter()
        .map(|k| k + random::ginibre(rng, 2, 2) * Complex64::new(scale, 0.0))
        .collect()
}

/// Best worst-case flip fidelity found by dense random sampling of channels
/// followed by local stochastic refinement of the best candidates.
pub fn brute_force_not_optimum(cfg: &BruteForceConfig) -> Result<(ChoiMatrix, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rule = IntegrationRule::fibonacci(cfg.grid_points);
    let mut pool: Vec<(f64, Vec<CMatrix>)> = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let raw: Vec<CMatrix> = (0..cfg.kraus_count)
            .map(|_| random::ginibre(&mut rng, 2, 2))
            .collect();
        let ch = ChoiMatrix::from_unnormalized_kraus(&raw)?;
        let kraus = ch.kraus();
        pool.push((score(&ch, &rule).worst, pad(kraus, cfg.kraus_count)));
    }
    pool.sort_by(|a, b| b.0.total_cmp(&a.0));
    pool.truncate(cfg.survivors.max(1));

    // Random-walk refinement on a soft minimum: the exact worst case has
    // kinks where almost every random step looks like a loss.
    let probes = Probes::new(&IntegrationRule::fibonacci(cfg.probe_points))?;
    let mut best: Option<(f64, ChoiMatrix)> = None;
    let stages = 6;
    for (_, mut kraus) in pool {
        for stage in 0..stages {
            let tau = 1e-2 * 10f64.powf(-(stage as f64) * 4.0 / (stages - 1) as f64);
            let mut value = probes.soft_worst(&ChoiMatrix::from_unnormalized_kraus(&kraus)?, tau);
            let mut scale = 0.05;
            for _ in 0..cfg.refinement_steps / stages {
                let trial = perturb(&mut rng, &kraus, scale);
                let Ok(ch) = ChoiMatrix::from_unnormalized_kraus(&trial) else {
                    continue;
                };
                let s = probes.soft_worst(&ch, tau);
                if s > value {
                    value = s;
                    kraus = pad(ch.kraus(), cfg.kraus_count);
                    scale = (scale * 1.3).min(0.5);
                } else {
                    scale = (scale * 0.97).max(1e-6);
                }
            }
        }
        let ch = ChoiMatrix::from_unnormalized_kraus(&kraus)?;
        let value = score(&ch, &rule).worst;
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, ch));
        }
    }
    let (_, ch) = best.expect("at least one survivor");
    let fine = score(&ch, &IntegrationRule::standard()).worst;
    Ok((ch, fine))
}

/// Input projectors and their orthogonal kets, so fidelities are evaluated
/// straight from the Choi matrix.
struct Probes(Vec<(CMatrix, CMatrix)>);

impl Probes {
    fn new(rule: &IntegrationRule) -> Result<Self> {
        let mut out = Vec::with_capacity(rule.len());
        for r in rule.points() {
            let psi = Ket::from_bloch(*r)?;
            let perp = orthogonal_pure(&psi)?;
            let v = CMatrix::from_fn(2, 1, |i, _| perp.amplitude(i));
            out.push((psi.projector(), v));
        }
        Ok(Probes(out))
    }

    /// `−τ log mean exp(−F/τ)` of the flip fidelity.
    fn soft_worst(&self, ch: &ChoiMatrix, tau: f64) -> f64 {
        let values: Vec<f64> = self
            .0
            .iter()
            .map(|(p, v)| (v.adjoint() * ch.apply_matrix(p) * v)[(0, 0)].re)
            .collect();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let sum: f64 = values.iter().map(|x| (-(x - lo) / tau).exp()).sum();
        lo - tau * (sum / values.len() as f64).ln()
    }
}

/// Pads a Kraus list with zero operators so perturbations can grow new terms.
fn pad(mut kraus: Vec<CMatrix>, count: usize) -> Vec<CMatrix> {
    while kraus.len() < count {
        kraus.push(CMatrix::zeros(2, 2));
    }
    kraus
}
