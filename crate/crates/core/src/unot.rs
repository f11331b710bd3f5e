//! How well can a physical channel approximate the universal NOT?
//!
//! The flip fidelity of `Λ` on `|ψ⟩` is `⟨ψ⊥|Λ(ψ)|ψ⊥⟩`. Writing `Λ` in Bloch
//! form `r ↦ M r + t`, it equals `(1 − r·(M r + t))/2`, which is what the
//! scoring functions evaluate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::Result;
use crate::qcore::{c, orthogonal_pure, random, CMatrix, Ket};

pub use crate::qcore::ChoiMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipScore {
    pub average: f64,
    pub worst: f64,
}

/// Fixed set of points on the Bloch sphere with equal weights.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationRule {
    points: Vec<[f64; 3]>,
}

impl IntegrationRule {
    /// Fibonacci lattice with `n` points.
    pub fn fibonacci(n: usize) -> Self {
        let golden = PI * (3.0 - 5f64.sqrt());
        let points = (0..n)
            .map(|k| {
                let z = 1.0 - (2 * k + 1) as f64 / n as f64;
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let phi = golden * k as f64;
                [rho * phi.cos(), rho * phi.sin(), z]
            })
            .collect();
        IntegrationRule { points }
    }

    /// The default rule: 16384 Fibonacci points.
    pub fn standard() -> Self {
        Self::fibonacci(1 << 14)
    }

    /// Every point moved by the Bloch rotation of the qubit unitary `u`.
    pub fn rotated(&self, u: &CMatrix) -> Self {
        let r = bloch_rotation(u);
        IntegrationRule {
            points: self.points.iter().map(|p| mat_vec(&r, p)).collect(),
        }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `R[j][k] = ½ Tr(σⱼ U σₖ U†)`.
pub fn bloch_rotation(u: &CMatrix) -> [[f64; 3]; 3] {
    let p = crate::qcore::pauli_basis();
    let mut r = [[0.0; 3]; 3];
    for j in 0..3 {
        for k in 0..3 {
            r[j][k] = 0.5 * (&p[j + 1] * u * &p[k + 1] * u.adjoint()).trace().re;
        }
    }
    r
}

fn mat_vec(m: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for j in 0..3 {
        out[j] = m[j][0] * v[0] + m[j][1] * v[1] + m[j][2] * v[2];
    }
    out
}

fn affine_fidelity(m: &[[f64; 3]; 3], t: &[f64; 3], r: &[f64; 3]) -> f64 {
    let image = mat_vec(m, r);
    let dot = (0..3).map(|j| r[j] * (image[j] + t[j])).sum::<f64>();
    0.5 * (1.0 - dot)
}

/// `⟨ψ⊥|Λ(|ψ⟩⟨ψ|)|ψ⊥⟩`
pub fn flip_fidelity(channel: &ChoiMatrix, psi: &Ket) -> Result<f64> {
    let perp = orthogonal_pure(psi)?;
    let out = channel.apply_matrix(&psi.projector());
    let v = perp.amplitudes();
    Ok((v.adjoint() * out * v)[(0, 0)].re)
}

/// Mean and minimum flip fidelity over the rule's points.
pub fn score(channel: &ChoiMatrix, rule: &IntegrationRule) -> FlipScore {
    let (m, t) = channel.bloch_affine();
    let mut sum = 0.0;
    let mut worst = f64::INFINITY;
    for r in &rule.points {
        let f = affine_fidelity(&m, &t, r);
        sum += f;
        worst = worst.min(f);
    }
    FlipScore {
        average: sum / rule.points.len() as f64,
        worst,
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub seed: u64,
    /// Iteration cap of the ascent.
    pub iterations: usize,
    /// Points in the smoothed objective.
    pub objective_points: usize,
    pub learning_rate: f64,
    /// Soft-min temperature at the first and last iteration.
    pub temperature: (f64, f64),
    /// Stop once the objective changes by less than this over `patience` iterations.
    pub stall_tol: f64,
    pub patience: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            seed: 0x5eed,
            iterations: 600,
            objective_points: 300,
            learning_rate: 0.03,
            temperature: (0.05, 2e-4),
            stall_tol: 1e-9,
            patience: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub min_eigenvalue: f64,
    pub tp_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Ascent,
    CovariantLine,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Ascent => "ascent",
            Strategy::CovariantLine => "covariant-line",
        }
    }
}

#[derive(Debug, Clone)]
pub struct NotOptimum {
    pub channel: ChoiMatrix,
    pub score: FlipScore,
    pub strategy: Strategy,
    pub ascent_score: FlipScore,
    pub line_score: FlipScore,
    /// Bloch scaling factor found on the covariant line.
    pub line_parameter: f64,
    pub trace: Vec<TraceRow>,
    /// Whether the ascent stalled before its iteration cap.
    pub converged: bool,
}

impl NotOptimum {
    /// Trace as tab-separated rows with a header.
    pub fn trace_tsv(&self) -> String {
        let mut out = String::from("iteration\tobjective\tmin_eigenvalue\ttp_residual\n");
        for r in &self.trace {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                r.iteration, r.objective, r.min_eigenvalue, r.tp_residual
            );
        }
        out
    }
}

const PARAMS: usize = 32;

fn channel_from_params(x: &[f64]) -> Result<ChoiMatrix> {
    let a = CMatrix::from_fn(4, 4, |i, j| c(x[2 * (4 * i + j)], x[2 * (4 * i + j) + 1]));
    ChoiMatrix::normalize_psd(&(&a * a.adjoint()))
}

fn soft_min(channel: &ChoiMatrix, rule: &IntegrationRule, tau: f64) -> f64 {
    let (m, t) = channel.bloch_affine();
    let values: Vec<f64> = rule.points.iter().map(|r| affine_fidelity(&m, &t, r)).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let sum: f64 = values.iter().map(|v| (-(v - lo) / tau).exp()).sum();
    lo - tau * (sum / values.len() as f64).ln()
}

/// Smallest `s` with `bloch_scaling(s)` completely positive, by bisection.
fn covariant_line_optimum() -> f64 {
    let feasible = |s: f64| crate::qcore::hermitian_eigen(&ChoiMatrix::bloch_scaling_matrix(s)).0[0] >= 0.0;
    let (mut lo, mut hi) = (-1.0, 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Maximizes the worst-case flip fidelity over qubit channels.
///
/// Two searches run. The ascent parameterizes `J ∝ AA†`, normalized onto the
/// trace-preserving set so every iterate is a channel, and climbs a soft-min
/// of the fidelity with Adam and finite-difference gradients. The covariant
/// line scans the unital channels that shrink Bloch vectors uniformly by `s`,
/// whose flip fidelity `(1 − s)/2` is state independent. The better of the two
/// is returned, scored on [`IntegrationRule::standard`].
pub fn optimize_universal_not(cfg: &OptimizerConfig) -> Result<NotOptimum> {
    let fine = IntegrationRule::standard();
    let coarse = IntegrationRule::fibonacci(cfg.objective_points);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = random::ginibre(&mut rng, 4, 4);
    let mut x = vec![0.0; PARAMS];
    for i in 0..4 {
        for j in 0..4 {
            x[2 * (4 * i + j)] = start[(i, j)].re;
            x[2 * (4 * i + j) + 1] = start[(i, j)].im;
        }
    }

    let (beta1, beta2, eps) = (0.9, 0.999, 1e-12);
    let mut m1 = vec![0.0; PARAMS];
    let mut m2 = vec![0.0; PARAMS];
    let mut trace = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut history: Vec<f64> = Vec::new();
    let mut converged = false;
    let h = 1e-6;
    for iter in 0..cfg.iterations {
        let frac = iter as f64 / (cfg.iterations.max(2) - 1) as f64;
        let tau = cfg.temperature.0 * (cfg.temperature.1 / cfg.temperature.0).powf(frac);
        let ch = channel_from_params(&x)?;
        let worst = score(&ch, &coarse).worst;
        trace.push(TraceRow {
            iteration: iter,
            objective: worst,
            min_eigenvalue: ch.min_eigenvalue(),
            tp_residual: ch.tp_residual(),
        });
        if best.as_ref().is_none_or(|(b, _)| worst > *b) {
            best = Some((worst, x.clone()));
        }
        history.push(worst);
        if history.len() > cfg.patience {
            let old = history[history.len() - 1 - cfg.patience];
            if (worst - old).abs() < cfg.stall_tol && frac > 0.5 {
                converged = true;
                break;
            }
        }
        let f0 = soft_min(&ch, &coarse, tau);
        let mut grad = vec![0.0; PARAMS];
        for k in 0..PARAMS {
            let mut xp = x.clone();
            xp[k] += h;
            let fp = match channel_from_params(&xp) {
                Ok(c) => soft_min(&c, &coarse, tau),
                Err(_) => f0,
            };
            grad[k] = (fp - f0) / h;
        }
        let t = (iter + 1) as i32;
        for k in 0..PARAMS {
            m1[k] = beta1 * m1[k] + (1.0 - beta1) * grad[k];
            m2[k] = beta2 * m2[k] + (1.0 - beta2) * grad[k] * grad[k];
            let mh = m1[k] / (1.0 - beta1.powi(t));
            let vh = m2[k] / (1.0 - beta2.powi(t));
            x[k] += cfg.learning_rate * mh / (vh.sqrt() + eps);
        }
    }
    let (_, best_x) = best.expect("at least one iteration");
    let ascent = channel_from_params(&best_x)?;
    let ascent_score = score(&ascent, &fine);

    let s = covariant_line_optimum();
    let line = ChoiMatrix::bloch_scaling(s)?;
    let line_score = score(&line, &fine);

    let (channel, score_, strategy) = if line_score.worst >= ascent_score.worst {
        (line, line_score, Strategy::CovariantLine)
    } else {
        (ascent, ascent_score, Strategy::Ascent)
    };
    Ok(NotOptimum {
        channel,
        score: score_,
        strategy,
        ascent_score,
        line_score,
        line_parameter: s,
        trace,
        converged,
    })
}
